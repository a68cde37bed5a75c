#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "qcomp/oracles.hpp"
#include "qcomp/sources.hpp"
#include "qcomp/typicality.hpp"

using namespace qcomp;

namespace {

RealMatrix reference_chain() {
    RealMatrix m(2, 2);
    m << 0.9, 0.1, 0.5, 0.5;
    return m;
}

RealMatrix three_state_chain() {
    RealMatrix m(3, 3);
    m << 0.6, 0.3, 0.1,
         0.2, 0.5, 0.3,
         0.0, 0.4, 0.6;
    return m;
}

Matrix qutrit_unitary() {
    rnd::Rng rng(99);
    return rnd::unitary(3, rng);
}

std::vector<SourceModel> reference_sources() {
    Matrix rho3(3, 3);
    rho3 << 0.5, Complex(0.1, 0.05), 0.0,
            Complex(0.1, -0.05), 0.3, 0.05,
            0.0, 0.05, 0.2;
    return {
        SourceModel::iid(DensityOperator::diagonal({0.9, 0.1})),
        SourceModel::iid(DensityOperator::maximally_mixed(2)),
        SourceModel::iid(DensityOperator(rho3)),
        SourceModel::rotated_markov(reference_chain(), hadamard()),
        SourceModel::rotated_markov(three_state_chain(), qutrit_unitary()),
    };
}

std::vector<double> dense_sorted(const DensityOperator& rho) {
    const RealVector ev = rho.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

}  // namespace

TEST(SourceModelTest, RejectsBadChains) {
    RealMatrix bad(2, 2);
    bad << 0.9, 0.2, 0.5, 0.5;
    try {
        SourceModel::rotated_markov(bad, hadamard());
        FAIL();
    } catch (const invariant_error& e) {
        EXPECT_EQ(e.invariant(), "row-stochastic");
    }
    RealMatrix periodic(2, 2);
    periodic << 0, 1, 1, 0;
    try {
        SourceModel::rotated_markov(periodic, hadamard());
        FAIL();
    } catch (const invariant_error& e) {
        EXPECT_EQ(e.invariant(), "primitive");
    }
    Matrix not_unitary = Matrix::Identity(2, 2) * 1.1;
    EXPECT_THROW(SourceModel::rotated_markov(reference_chain(), not_unitary), invariant_error);
    EXPECT_THROW(SourceModel::rotated_markov(reference_chain(), Matrix::Identity(3, 3)), dimension_error);
}

TEST(BlockState, IidProduct) {
    const auto src = SourceModel::iid(DensityOperator::diagonal({0.9, 0.1}));
    const RealVector d = block_state(src, 2).matrix().diagonal().real();
    EXPECT_NEAR(d[0], 0.81, 1e-15);
    EXPECT_NEAR(d[1], 0.09, 1e-15);
    EXPECT_NEAR(d[2], 0.09, 1e-15);
    EXPECT_NEAR(d[3], 0.01, 1e-15);
}

TEST(BlockState, MarkovSingleSite) {
    const auto plain = SourceModel::rotated_markov(reference_chain(), Matrix::Identity(2, 2));
    const Matrix m = block_state(plain, 1).matrix();
    EXPECT_NEAR(m(0, 0).real(), 5.0 / 6.0, 1e-14);
    EXPECT_NEAR(m(1, 1).real(), 1.0 / 6.0, 1e-14);
    const auto rotated = SourceModel::rotated_markov(reference_chain(), hadamard());
    const Matrix r = block_state(rotated, 1).matrix();
    EXPECT_LE(max_abs(r - hadamard() * m * hadamard().adjoint()), 1e-14);
    const RealVector ev = block_state(rotated, 1).eigenvalues();
    EXPECT_NEAR(ev[0], 5.0 / 6.0, 1e-14);
}

TEST(BlockState, CapIsEnforced) {
    const auto src = SourceModel::iid(DensityOperator::maximally_mixed(2));
    SourceLimits lim;
    lim.dense_cap = 4;
    EXPECT_NO_THROW(block_state(src, 2, lim));
    EXPECT_THROW(block_state(src, 3, lim), capacity_error);
}

TEST(ClassSpectrumTest, IidBinaryTwoSites) {
    const auto cs = class_spectrum(SourceModel::iid(DensityOperator::diagonal({0.9, 0.1})), 2);
    ASSERT_EQ(cs.size(), 3u);
    EXPECT_NEAR(cs.classes[0].value(), 0.81, 1e-15);
    EXPECT_EQ(cs.classes[0].multiplicity, 1.0);
    EXPECT_NEAR(cs.classes[1].value(), 0.09, 1e-15);
    EXPECT_EQ(cs.classes[1].multiplicity, 2.0);
    EXPECT_NEAR(cs.classes[2].value(), 0.01, 1e-15);
}

TEST(ClassSpectrumTest, MaximallyMixedIsOneClass) {
    const auto cs = class_spectrum(SourceModel::iid(DensityOperator::maximally_mixed(2)), 10);
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_NEAR(cs.classes[0].value(), 1.0 / 1024, 1e-18);
    EXPECT_EQ(cs.classes[0].multiplicity, 1024.0);
}

TEST(ClassSpectrumTest, MarkovTwoSites) {
    const auto cs = class_spectrum(SourceModel::rotated_markov(reference_chain(), hadamard()), 2);
    const auto v = cs.expanded_values();
    ASSERT_EQ(v.size(), 4u);
    EXPECT_NEAR(v[0], 0.75, 1e-15);
    for (int i = 1; i < 4; ++i) EXPECT_NEAR(v[i], 1.0 / 12, 1e-15);
}

TEST(ClassSpectrumTest, LargeIidStaysNormalised) {
    const auto cs = class_spectrum(SourceModel::iid(DensityOperator::diagonal({0.9, 0.1})), 1000);
    EXPECT_EQ(cs.size(), 1001u);
    EXPECT_NEAR(cs.total_mass(), 1.0, 1e-9);
    EXPECT_NEAR(cs.log2_total_dim, 1000.0, 1e-12);
}

TEST(ClassSpectrumTest, DenseOracleEquivalence) {
    for (const auto& src : reference_sources()) {
        const std::size_t n_max = src.site_dim() == 2 ? 8 : 6;
        for (std::size_t n = 1; n <= n_max; ++n) {
            const auto cs = class_spectrum(src, n);
            const auto fast = cs.expanded_values();
            const auto dense = dense_sorted(block_state(src, n));
            ASSERT_EQ(fast.size(), dense.size());
            for (std::size_t i = 0; i < fast.size(); ++i) {
                ASSERT_NEAR(fast[i], dense[i], 1e-9) << src.describe() << " n=" << n << " i=" << i;
            }
            EXPECT_NEAR(cs.total_mass(), 1.0, 1e-9);
        }
    }
}

TEST(ClassSpectrumTest, TransitionCountsMatchWords) {
    const std::vector<SourceModel> chains{
        SourceModel::rotated_markov(reference_chain(), hadamard()),
        SourceModel::rotated_markov(three_state_chain(), qutrit_unitary()),
    };
    for (const auto& src : chains) {
        const std::size_t n_max = src.site_dim() == 2 ? 12 : 8;
        for (std::size_t n = 1; n <= n_max; ++n) {
            const auto words = class_spectrum(src, n, {}, MarkovPath::words).expanded_values();
            const auto counts = class_spectrum(src, n, {}, MarkovPath::transition_counts).expanded_values();
            ASSERT_EQ(words.size(), counts.size()) << n;
            for (std::size_t i = 0; i < words.size(); ++i) ASSERT_NEAR(words[i], counts[i], 1e-12) << n;
        }
    }
}

TEST(ClassSpectrumTest, WordPathMatchesDirectProducts) {
    const auto src = SourceModel::rotated_markov(three_state_chain(), qutrit_unitary());
    const auto& m = *src.as_markov();
    auto direct = oracle::markov_word_values(m.transition, m.initial, 5);
    std::sort(direct.rbegin(), direct.rend());
    const auto fast = class_spectrum(src, 5, {}, MarkovPath::words).expanded_values();
    ASSERT_EQ(direct.size(), fast.size());
    for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(direct[i], fast[i], 1e-15);
}

TEST(ClassSpectrumTest, WordCapRejects) {
    const auto src = SourceModel::rotated_markov(reference_chain(), hadamard());
    EXPECT_THROW(class_spectrum(src, 25, {}, MarkovPath::words), capacity_error);
    const auto cs = class_spectrum(src, 200);
    EXPECT_EQ(cs.label_kind, LabelKind::transition_counts);
    EXPECT_NEAR(cs.total_mass(), 1.0, 1e-9);
    EXPECT_NEAR(cs.total_multiplicity() / std::exp2(200.0), 1.0, 1e-9);
}

TEST(ClassSpectrumTest, SpectrumIndependentOfRotation) {
    const auto a = SourceModel::rotated_markov(reference_chain(), Matrix::Identity(2, 2));
    const auto b = SourceModel::rotated_markov(reference_chain(), hadamard());
    for (std::size_t n : {3u, 6u}) {
        const auto da = dense_sorted(block_state(a, n));
        const auto db = dense_sorted(block_state(b, n));
        for (std::size_t i = 0; i < da.size(); ++i) EXPECT_NEAR(da[i], db[i], 1e-9);
    }
}

TEST(EntropyRate, ReferenceValues) {
    EXPECT_NEAR(entropy_rate_exact(SourceModel::iid(DensityOperator::maximally_mixed(2))), 1.0, 1e-15);
    EXPECT_NEAR(entropy_rate_exact(SourceModel::iid(DensityOperator::diagonal({0.9, 0.1}))), 0.4689955935892811,
                1e-13);
    EXPECT_NEAR(entropy_rate_exact(SourceModel::rotated_markov(reference_chain(), hadamard())), 0.5574963279910677,
                1e-13);
}

TEST(EntropyRate, BlockEntropyGapShrinks) {
    const auto src = SourceModel::rotated_markov(reference_chain(), hadamard());
    const double s = entropy_rate_exact(src);
    double prev = 1.0;
    for (std::size_t n = 2; n <= 16; ++n) {
        const double gap = von_neumann_entropy(class_spectrum(src, n)) / static_cast<double>(n) - s;
        EXPECT_LE(gap, prev + 1e-12) << n;
        prev = gap;
    }
    EXPECT_NEAR(prev, 0.005783, 1e-5);
    const auto iid = SourceModel::iid(DensityOperator::diagonal({0.9, 0.1}));
    for (std::size_t n : {1u, 7u, 300u}) {
        EXPECT_NEAR(von_neumann_entropy(class_spectrum(iid, n)) / static_cast<double>(n), entropy_rate_exact(iid),
                    1e-9);
    }
}

TEST(Consistency, ReferenceSources) {
    for (const auto& src : reference_sources()) {
        const std::size_t n_max = src.site_dim() == 2 ? 7 : 5;
        for (std::size_t n = 1; n <= n_max; ++n) {
            const auto r = check_consistency(src, n);
            EXPECT_TRUE(r.passed()) << src.describe() << " n=" << n << " " << r.residual_trace_last << " "
                                    << r.residual_trace_first;
        }
    }
}

TEST(Consistency, NonStationaryStartIsFlagged) {
    RealVector uniform(2);
    uniform << 0.5, 0.5;
    const auto src = SourceModel::rotated_markov(reference_chain(), uniform, Matrix::Identity(2, 2));
    const auto r = check_consistency(src, 1);
    EXPECT_LE(r.residual_trace_last, 1e-12);
    EXPECT_GT(r.residual_trace_first, 1e-3);
    EXPECT_FALSE(r.passed());
}

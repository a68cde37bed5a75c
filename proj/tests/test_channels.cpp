#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qcomp/channels.hpp"
#include "qcomp/random.hpp"

using namespace qcomp;

namespace {

Matrix ket_bra(Index rows, Index cols, Index i, Index j) {
    Matrix m = Matrix::Zero(rows, cols);
    m(i, j) = 1.0;
    return m;
}

KrausChannel reset_to_zero() {
    return KrausChannel(2, 2, {KrausOperator(ket_bra(2, 2, 0, 0)), KrausOperator(ket_bra(2, 2, 0, 1))});
}

SourceModel binary_iid() { return SourceModel::iid(DensityOperator::diagonal({0.9, 0.1})); }

}  // namespace

TEST(KrausChannelTest, IdentityAndUnitary) {
    rnd::Rng rng(2);
    const auto rho = rnd::density(3, rng);
    EXPECT_LE(max_abs(apply(KrausChannel::identity(3), rho).matrix() - rho.matrix()), 1e-15);
    const Matrix u = rnd::unitary(3, rng);
    const auto out = apply(KrausChannel::unitary(u), rho);
    EXPECT_LE(max_abs(out.matrix() - u * rho.matrix() * u.adjoint()), 1e-14);
    EXPECT_LE((out.eigenvalues() - rho.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KrausChannelTest, ResetChannel) {
    const auto out = apply(reset_to_zero(), DensityOperator::maximally_mixed(2));
    EXPECT_LE(max_abs(out.matrix() - ket_bra(2, 2, 0, 0)), 1e-15);
}

TEST(KrausChannelTest, CompletenessEnforced) {
    try {
        KrausChannel(2, 2, {KrausOperator(ket_bra(2, 2, 0, 0))});
        FAIL();
    } catch (const invariant_error& e) {
        EXPECT_EQ(e.invariant(), "completeness");
    }
    EXPECT_THROW(KrausChannel(2, 2, {KrausOperator(Matrix::Identity(3, 3))}), dimension_error);
    EXPECT_THROW(apply(KrausChannel::identity(2), DensityOperator::maximally_mixed(3)), dimension_error);
}

TEST(KrausChannelTest, RankOneOperatorsAgreeWithDense) {
    rnd::Rng rng(4);
    const Matrix u = rnd::unitary(4, rng);
    std::vector<KrausOperator> r1;
    std::vector<KrausOperator> dense;
    for (Index i = 0; i < 4; ++i) {
        Vector target = Vector::Zero(4);
        target[i % 2] = 1.0;
        r1.push_back(KrausOperator::outer(target, u.col(i)));
        dense.emplace_back(Matrix(target * u.col(i).adjoint()));
    }
    const KrausChannel a(4, 4, r1);
    const KrausChannel b(4, 4, dense);
    const auto rho = rnd::density(4, rng);
    EXPECT_LE(max_abs(apply(a, rho).matrix() - apply(b, rho).matrix()), 1e-14);
    const auto ta = a.traces_with(rho.matrix());
    const auto tb = b.traces_with(rho.matrix());
    for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_LE(std::abs(ta[i] - tb[i]), 1e-14);
    Matrix psis = rnd::ginibre(4, 3, rng);
    psis.colwise().normalize();
    EXPECT_LE((a.pure_overlaps(psis) - b.pure_overlaps(psis)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(KrausOperatorTest, FactoredFormMatchesDense) {
    rnd::Rng rng(5);
    const Matrix l = rnd::ginibre(5, 2, rng);
    const Matrix r = rnd::ginibre(4, 2, rng);
    const auto f = KrausOperator::factored(l, r);
    const KrausOperator d(Matrix(l * r.adjoint()));
    EXPECT_EQ(f.rows(), 5);
    EXPECT_EQ(f.cols(), 4);
    EXPECT_FALSE(f.rank_one());
    EXPECT_NEAR(f.norm(), d.norm(), 1e-12);
    EXPECT_LE(max_abs(f.gram() - d.gram()), 1e-12);
    const Matrix rho = rnd::density(4, rng).matrix();
    EXPECT_LE(max_abs(f.sandwich(rho) - d.sandwich(rho)), 1e-12);
    const Vector x = rnd::ginibre(4, 1, rng).col(0);
    EXPECT_LE(max_abs(Matrix(f * x - d * x)), 1e-12);

    const auto sq = KrausOperator::factored(rnd::ginibre(4, 3, rng), rnd::ginibre(4, 3, rng));
    const KrausOperator sq_dense(sq.dense());
    EXPECT_NEAR(std::abs(sq.trace_with(rho) - sq_dense.trace_with(rho)), 0.0, 1e-12);

    // every dense/factored pairing of a product
    const KrausOperator thin(rnd::ginibre(4, 2, rng));        // 4x2, narrow inner dimension
    const KrausOperator wide(rnd::ginibre(2, 4, rng));        // 2x4
    const auto one = KrausOperator::outer(rnd::ginibre(4, 1, rng).col(0), rnd::ginibre(4, 1, rng).col(0));
    const std::vector<KrausOperator> ops{KrausOperator(rnd::ginibre(4, 4, rng)), sq, one};
    for (const auto& a : ops) {
        for (const auto& b : ops) {
            EXPECT_LE(max_abs(a.after(b).dense() - a.dense() * b.dense()), 1e-11);
        }
    }
    const auto narrow = thin.after(wide);
    EXPECT_TRUE(narrow.factored());
    EXPECT_LE(max_abs(narrow.dense() - thin.dense() * wide.dense()), 1e-12);
    EXPECT_THROW(KrausOperator::factored(Matrix(3, 2), Matrix(3, 1)), dimension_error);
}

TEST(KrausChannelTest, FactoredOperatorsAgreeWithDense) {
    rnd::Rng rng(9);
    const Matrix u = rnd::unitary(5, rng);
    const Matrix head = u.leftCols(3);
    std::vector<KrausOperator> fac{KrausOperator::factored(head, head)};
    std::vector<KrausOperator> dense{KrausOperator(Matrix(head * head.adjoint()))};
    Vector target = u.col(0);
    for (Index i = 3; i < 5; ++i) {
        fac.push_back(KrausOperator::outer(target, u.col(i)));
        dense.emplace_back(Matrix(target * u.col(i).adjoint()));
    }
    const KrausChannel a(5, 5, fac);
    const KrausChannel b(5, 5, dense);
    EXPECT_LE(a.completeness_error(), 1e-12);
    const auto rho = rnd::density(5, rng);
    EXPECT_LE(max_abs(apply(a, rho).matrix() - apply(b, rho).matrix()), 1e-13);
    Matrix psis = rnd::ginibre(5, 4, rng);
    psis.colwise().normalize();
    EXPECT_LE((a.pure_overlaps(psis) - b.pure_overlaps(psis)).cwiseAbs().maxCoeff(), 1e-13);
    const auto ta = a.traces_with(rho.matrix());
    const auto tb = b.traces_with(rho.matrix());
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_LE(std::abs(ta[i] - tb[i]), 1e-13);
}

TEST(Compose, CompletenessMeasuredOnRequest) {
    rnd::Rng rng(10);
    const auto a = rnd::channel(3, rng);
    const auto b = rnd::channel(3, rng);
    const auto c = compose(a, b);
    EXPECT_LE(c.completeness_error(), 1e-10);
    const auto rho = rnd::density(3, rng);
    EXPECT_LE(max_abs(apply(c, rho).matrix() - apply(b, apply(a, rho)).matrix()), 1e-12);
}

TEST(KrausChannelTest, TracePreservingOnRandomInputs) {
    rnd::Rng rng(6);
    for (int t = 0; t < 50; ++t) {
        const std::size_t d = 2 + static_cast<std::size_t>(t % 4);
        const auto ch = rnd::channel(d, rng);
        EXPECT_LE(ch.completeness_error(), 1e-10);
        const Matrix out = ch.apply(rnd::density(d, rng).matrix());
        EXPECT_NEAR(out.trace().real(), 1.0, 1e-9);
    }
}

TEST(Compression, QubitExample) {
    const Projector p(Matrix(Matrix::Identity(2, 1)));
    Vector zero = Vector::Zero(2);
    zero[0] = 1.0;
    const auto c = build_compression(p, zero);
    EXPECT_EQ(c.in_dim(), 2u);
    EXPECT_EQ(c.out_dim(), 1u);
    ASSERT_EQ(c.size(), 2u);
    rnd::Rng rng(8);
    const auto out = apply(c, rnd::density(2, rng));
    EXPECT_NEAR(out.matrix()(0, 0).real(), 1.0, 1e-14);
    // round trip is the reset channel
    const auto rt = compose(c, build_decompression(p));
    const auto back = apply(rt, DensityOperator::maximally_mixed(2));
    EXPECT_LE(max_abs(back.matrix() - ket_bra(2, 2, 0, 0)), 1e-15);
}

TEST(Compression, FullSpaceIsIdentity) {
    rnd::Rng rng(10);
    const auto p = Projector::full(3);
    const auto c = build_compression(p, rnd::pure_vector(3, rng));
    EXPECT_EQ(c.size(), 1u);
    const auto rho = rnd::density(3, rng);
    EXPECT_LE(max_abs(apply(c, rho).matrix() - rho.matrix()), 1e-14);
    EXPECT_LE(max_abs(apply(build_decompression(p), rho).matrix() - rho.matrix()), 1e-14);
}

TEST(Compression, ZeroVectorOutsideRangeRejected) {
    const Projector p(Matrix(Matrix::Identity(3, 2)));
    Vector e2 = Vector::Zero(3);
    e2[2] = 1.0;
    try {
        build_compression(p, e2);
        FAIL();
    } catch (const invariant_error& e) {
        EXPECT_EQ(e.invariant(), "zero-in-range");
    }
}

TEST(Compression, RoundTripFixesStatesInRange) {
    rnd::Rng rng(12);
    for (int t = 0; t < 10; ++t) {
        const Matrix u = rnd::unitary(5, rng);
        const Projector p(u.leftCols(3));
        const auto rt = compose(build_compression(p, u.col(1)), build_decompression(p));
        EXPECT_LE(rt.completeness_error(), 1e-10);
        const Vector psi = u.leftCols(3) * rnd::pure_vector(3, rng);
        const auto rho = DensityOperator::pure(psi);
        EXPECT_LE(max_abs(apply(rt, rho).matrix() - rho.matrix()), 1e-10);
    }
}

TEST(Compose, IdentityAndUnitaries) {
    rnd::Rng rng(14);
    const auto ch = rnd::isometry_channel(3, 3, rng);
    const auto rho = rnd::density(3, rng);
    EXPECT_LE(max_abs(apply(compose(KrausChannel::identity(3), ch), rho).matrix() - apply(ch, rho).matrix()), 1e-12);
    const Matrix u = rnd::unitary(3, rng);
    const Matrix v = rnd::unitary(3, rng);
    const auto uv = compose(KrausChannel::unitary(u), KrausChannel::unitary(v));
    EXPECT_LE(max_abs(apply(uv, rho).matrix() - v * u * rho.matrix() * (v * u).adjoint()), 1e-13);
    EXPECT_THROW(compose(KrausChannel::identity(2), KrausChannel::identity(3)), dimension_error);
}

TEST(Compose, PrunesVanishingProducts) {
    // |0><e| followed by a projection onto |1> leaves nothing.
    const auto c = build_compression(Projector(Matrix(Matrix::Identity(2, 1))), Vector(Vector::Unit(2, 0)));
    Matrix to1 = Matrix::Zero(2, 1);
    to1(1, 0) = 1.0;
    const KrausChannel embed(1, 2, {KrausOperator(to1)});
    const auto rt = compose(c, embed);
    EXPECT_EQ(rt.size() + rt.pruned(), 2u);
}

TEST(Scheme, EpsilonModeSingleSite) {
    const auto s = make_scheme(binary_iid(), 1, EpsilonLevel{0.15});
    EXPECT_EQ(s.rank(), 1u);
    EXPECT_EQ(s.rate(), 0.0);
    EXPECT_NEAR(s.captured_mass, 0.9, 1e-14);
}

TEST(Scheme, EpsilonModeEightSites) {
    const auto s = make_scheme(binary_iid(), 8, EpsilonLevel{0.1});
    EXPECT_EQ(s.rank(), 26u);
    EXPECT_GE(s.captured_mass, 0.9);
    EXPECT_NEAR(s.subspace.expectation(s.state.matrix()), s.captured_mass, 1e-12);
    EXPECT_LT(s.rate(), 1.0);
    EXPECT_NEAR(s.qubit_rate(), 5.0 / 8.0, 1e-15);
    const auto compressed = apply(s.compressor, s.state);
    EXPECT_LE(von_neumann_entropy(compressed), std::log2(26.0) + 1e-9);
    EXPECT_LE(s.round_trip().completeness_error(), 1e-10);
}

TEST(Scheme, RateModeFullSpace) {
    const auto s = make_scheme(binary_iid(), 4, TargetRate{1.0});
    EXPECT_EQ(s.rank(), 16u);
    const auto rt = s.round_trip();
    EXPECT_LE(max_abs(apply(rt, s.state).matrix() - s.state.matrix()), 1e-12);
}

TEST(Scheme, RateModeRejectsEmptySubspace) {
    EXPECT_THROW(make_scheme(binary_iid(), 4, TargetRate{-0.5}), std::invalid_argument);
    EXPECT_EQ(make_scheme(binary_iid(), 6, TargetRate{0.25}).rank(), 2u);
}

TEST(Scheme, EpsilonNearOneIsRankOne) {
    RealMatrix m(2, 2);
    m << 0.9, 0.1, 0.5, 0.5;
    const auto s = make_scheme(SourceModel::rotated_markov(m, hadamard()), 4, EpsilonLevel{0.99});
    EXPECT_EQ(s.rank(), 1u);
}

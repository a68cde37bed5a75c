#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qcomp/fidelity.hpp"
#include "qcomp/random.hpp"

using namespace qcomp;

namespace {

Matrix ket_bra(Index i, Index j) {
    Matrix m = Matrix::Zero(2, 2);
    m(i, j) = 1.0;
    return m;
}

KrausChannel reset_to_zero() { return KrausChannel(2, 2, {KrausOperator(ket_bra(0, 0)), KrausOperator(ket_bra(0, 1))}); }

DensityOperator basis_state(Index i) {
    Vector v = Vector::Zero(2);
    v[i] = 1.0;
    return DensityOperator::pure(v);
}

}  // namespace

TEST(Fidelity, Examples) {
    rnd::Rng rng(1);
    const auto rho = rnd::density(3, rng);
    EXPECT_NEAR(fidelity(rho, rho), 1.0, 1e-9);
    EXPECT_NEAR(fidelity(basis_state(0), basis_state(1)), 0.0, 1e-12);
    EXPECT_NEAR(fidelity(basis_state(0), DensityOperator::maximally_mixed(2)), std::sqrt(0.5), 1e-12);
    EXPECT_THROW(fidelity(rho, DensityOperator::maximally_mixed(2)), dimension_error);
}

TEST(Fidelity, SymmetricAndMatchesNuclearRoute) {
    rnd::Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = 2 + static_cast<std::size_t>(t % 4);
        const auto a = rnd::density(d, rng);
        const auto b = rnd::density(d, rng);
        EXPECT_NEAR(fidelity(a, b), fidelity(b, a), 1e-9);
        EXPECT_NEAR(fidelity(a, b), fidelity_nuclear(a, b), 1e-9);
    }
}

TEST(Fidelity, PureStatesReduceToOverlap) {
    rnd::Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const Vector psi = rnd::pure_vector(3, rng);
        const Vector phi = rnd::pure_vector(3, rng);
        const double overlap = std::abs(psi.dot(phi));
        EXPECT_NEAR(fidelity(DensityOperator::pure(psi), DensityOperator::pure(phi)), overlap, 1e-9);
        EXPECT_NEAR(fidelity_pure(psi, DensityOperator::pure(phi)), overlap, 1e-12);
    }
}

TEST(Fidelity, MonotoneUnderChannelsAndJointlyConcave) {
    rnd::Rng rng(4);
    std::uniform_real_distribution<double> lam(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = 2 + static_cast<std::size_t>(t % 3);
        const auto r1 = rnd::density(d, rng);
        const auto s1 = rnd::density(d, rng);
        const auto ch = rnd::channel(d, rng);
        EXPECT_GE(fidelity(apply(ch, r1), apply(ch, s1)), fidelity(r1, s1) - 1e-9);
        const auto r2 = rnd::density(d, rng);
        const auto s2 = rnd::density(d, rng);
        const double l = lam(rng);
        const DensityOperator r = DensityOperator::trusted(l * r1.matrix() + (1 - l) * r2.matrix());
        const DensityOperator s = DensityOperator::trusted(l * s1.matrix() + (1 - l) * s2.matrix());
        EXPECT_GE(fidelity(r, s), l * fidelity(r1, s1) + (1 - l) * fidelity(r2, s2) - 1e-9);
    }
}

TEST(TraceDistance, Examples) {
    EXPECT_NEAR(trace_distance(basis_state(0), basis_state(0)), 0.0, 1e-15);
    EXPECT_NEAR(trace_distance(basis_state(0), basis_state(1)), 1.0, 1e-14);
    EXPECT_NEAR(trace_distance(DensityOperator::diagonal({0.9, 0.1}), DensityOperator::maximally_mixed(2)), 0.4, 1e-14);
}

TEST(EntanglementFidelity, ResetChannel) {
    const auto mixed = DensityOperator::maximally_mixed(2);
    EXPECT_NEAR(entanglement_fidelity_kraus(mixed, reset_to_zero()), 0.25, 1e-14);
    EXPECT_NEAR(entanglement_fidelity_purification(mixed, reset_to_zero()), 0.25, 1e-8);
    EXPECT_NEAR(entanglement_fidelity_kraus(mixed, KrausChannel::identity(2)), 1.0, 1e-14);
    EXPECT_NEAR(entanglement_fidelity_purification(mixed, KrausChannel::identity(2)), 1.0, 1e-12);
}

TEST(EntanglementFidelity, RoutesAgreeAndPurificationIndependence) {
    rnd::Rng rng(5);
    for (int t = 0; t < 60; ++t) {
        const std::size_t d = 2 + static_cast<std::size_t>(t % 3);
        const auto rho = rnd::density(d, rng);
        const auto ch = rnd::channel(d, rng);
        const double k = entanglement_fidelity_kraus(rho, ch);
        EXPECT_NEAR(k, entanglement_fidelity_purification(rho, ch), 1e-8);
        EXPECT_NEAR(k, entanglement_fidelity_purification(rho, ch, 4096, rnd::unitary(d, rng)), 1e-8);
    }
}

TEST(EntanglementFidelity, Rejections) {
    const auto up = KrausChannel(2, 1, {KrausOperator(Matrix(Matrix::Identity(1, 2))), KrausOperator(Matrix(ket_bra(0, 1).topRows(1)))});
    EXPECT_THROW(entanglement_fidelity_kraus(DensityOperator::maximally_mixed(2), up), dimension_error);
    EXPECT_THROW(entanglement_fidelity_purification(DensityOperator::maximally_mixed(4), KrausChannel::identity(4), 8),
                 capacity_error);
}

TEST(EntanglementFidelity, ConvexInState) {
    rnd::Rng rng(6);
    std::uniform_real_distribution<double> lam(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const auto a = rnd::density(3, rng);
        const auto b = rnd::density(3, rng);
        const auto ch = rnd::channel(3, rng);
        const double l = lam(rng);
        const auto mix = DensityOperator::trusted(l * a.matrix() + (1 - l) * b.matrix());
        EXPECT_LE(entanglement_fidelity_kraus(mix, ch),
                  l * entanglement_fidelity_kraus(a, ch) + (1 - l) * entanglement_fidelity_kraus(b, ch) + 1e-9);
    }
}

TEST(EnsembleTest, Validation) {
    std::vector<Ensemble::Item> bad{{0.5, DensityOperator::maximally_mixed(2)}, {0.6, DensityOperator::maximally_mixed(2)}};
    EXPECT_THROW(Ensemble{bad}, invariant_error);
    std::vector<Ensemble::Item> mixed_dims{{0.5, DensityOperator::maximally_mixed(2)}, {0.5, DensityOperator::maximally_mixed(3)}};
    EXPECT_THROW(Ensemble{mixed_dims}, dimension_error);
    std::vector<Ensemble::Item> unnormalised{{1.0, Vector(Vector::Ones(2))}};
    EXPECT_THROW(Ensemble{unnormalised}, invariant_error);
    std::vector<Ensemble::Item> ok{{0.25, basis_state(0)}, {0.75, Vector(Vector::Unit(2, 1))}};
    const Ensemble e(ok);
    EXPECT_TRUE(e.pure(0));
    EXPECT_TRUE(e.pure(1));
    EXPECT_NEAR(e.average()(1, 1).real(), 0.75, 1e-15);
}

TEST(EnsembleFidelity, Examples) {
    const auto mixed = DensityOperator::maximally_mixed(2);
    EXPECT_NEAR(ensemble_fidelity(Ensemble::eigen(mixed), reset_to_zero()), 0.5, 1e-12);
    rnd::Rng rng(7);
    const auto rho = rnd::density(3, rng);
    const auto ch = rnd::channel(3, rng);
    const Ensemble single({{1.0, rho}});
    const double f = fidelity(rho, apply(ch, rho));
    EXPECT_NEAR(ensemble_fidelity(single, ch), f * f, 1e-12);
    EXPECT_NEAR(ensemble_fidelity(Ensemble::eigen(rho), KrausChannel::identity(3)), 1.0, 1e-9);
}

TEST(EnsembleFidelity, MixedMembersMatchPureMembers) {
    rnd::Rng rng(8);
    const auto rho = rnd::density(3, rng);
    const auto s = rho.spectrum();
    std::vector<Ensemble::Item> as_density;
    for (Index i = 0; i < 3; ++i) as_density.push_back({s.values[i], DensityOperator::pure(s.vectors.col(i))});
    const auto ch = rnd::channel(3, rng);
    EXPECT_NEAR(ensemble_fidelity(Ensemble(as_density), ch), ensemble_fidelity(Ensemble::eigen(s), ch), 1e-9);
}

TEST(FsBoundsTest, Examples) {
    const auto mixed = DensityOperator::maximally_mixed(2);
    const auto id = fs_bounds(mixed, KrausChannel::identity(2), 2);
    EXPECT_NEAR(id.lower, 1.0, 1e-12);
    EXPECT_NEAR(id.fidelity_part, 1.0, 1e-9);

    const auto b = fs_bounds(mixed, reset_to_zero(), 1);
    EXPECT_NEAR(b.lower, 0.5, 1e-12);
    EXPECT_NEAR(b.six_eta, 3.0, 1e-12);
    EXPECT_NEAR(b.upper, std::sqrt(0.5), 1e-12);

    rnd::Rng rng(9);
    const auto pure = DensityOperator::pure(rnd::pure_vector(3, rng));
    const auto ch = rnd::channel(3, rng);
    EXPECT_NEAR(fs_bounds(pure, ch, 3).lower, entanglement_fidelity_kraus(pure, ch), 1e-9);
}

TEST(Inequalities, EqualStatesHaveZeroEstimateSlack) {
    rnd::Rng rng(10);
    const auto rho = rnd::density(2, rng);
    const auto r = check_inequalities(rho, rho, Ensemble::eigen(rho), KrausChannel::identity(2));
    EXPECT_NEAR(r.slack.at("estimate.lower"), 0.0, 1e-7);
    EXPECT_NEAR(r.slack.at("estimate.upper"), 0.0, 1e-4);
    EXPECT_TRUE(r.passed());
}

TEST(Inequalities, RandomQubitTriples) {
    rnd::Rng rng(11);
    for (int t = 0; t < 1000; ++t) {
        const auto rho = rnd::density(2, rng);
        const auto sigma = rnd::density(2, rng);
        const auto ch = rnd::channel(2, rng);
        const auto r = check_inequalities(rho, sigma, Ensemble::eigen(rho), ch);
        ASSERT_TRUE(r.passed()) << t << " " << (r.failures().empty() ? "" : r.failures().front());
    }
}

TEST(Inequalities, ChainForSchemeRoundTrips) {
    const auto src = SourceModel::iid(DensityOperator::diagonal({0.9, 0.1}));
    for (std::size_t n : {2u, 4u, 6u}) {
        const auto s = make_scheme(src, n, EpsilonLevel{0.2});
        const auto rt = s.round_trip();
        const auto r = check_inequalities(s.state, apply(rt, s.state), Ensemble::eigen(s.spectrum), rt, n, 2);
        EXPECT_TRUE(r.passed()) << n;
        EXPECT_GE(entanglement_fidelity_kraus(s.state, rt), s.captured_mass * s.captured_mass - 1e-9);
    }
}

// validation.hpp - seeded property suites shared by `qcomp validate` and the
// acceptance runner. Each suite reports its trial count and the worst slack
// seen; a suite passes when worst_slack >= -tolerance.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qcomp/channels.hpp"
#include "qcomp/fidelity.hpp"
#include "qcomp/oracles.hpp"
#include "qcomp/random.hpp"
#include "qcomp/sources.hpp"
#include "qcomp/typicality.hpp"

namespace qcomp::validation {

enum class Status { pass, fail, skipped };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::pass: return "pass";
        case Status::fail: return "fail";
        default: return "skipped";
    }
}

struct SuiteResult {
    std::string name;
    double tolerance = 0.0;
    std::size_t trials = 0;
    std::size_t skipped_trials = 0;
    double worst_slack = std::numeric_limits<double>::infinity();
    std::string reason;   // skip reason code or first failure

    void record(double slack, const std::string& what = {}) {
        ++trials;
        if (std::isnan(slack)) slack = -std::numeric_limits<double>::infinity();
        if (slack < -tolerance && worst_slack >= -tolerance && reason.empty()) reason = what;
        worst_slack = std::min(worst_slack, slack);
    }

    void skip(const std::string& why) {
        ++skipped_trials;
        if (reason.empty()) reason = why;
    }

    Status status() const {
        if (trials == 0) return Status::skipped;
        return worst_slack >= -tolerance ? Status::pass : Status::fail;
    }
};

struct NamedSource {
    std::string name;
    SourceModel model;
};

inline RealMatrix reference_chain() {
    RealMatrix m(2, 2);
    m << 0.9, 0.1, 0.5, 0.5;
    return m;
}

inline std::vector<NamedSource> reference_sources() {
    Matrix tilted(2, 2);
    tilted << 0.7, Complex(0.2, -0.1), Complex(0.2, 0.1), 0.3;
    Vector pure(2);
    pure << 0.6, Complex(0.0, 0.8);
    RealMatrix lazy(2, 2);
    lazy << 0.6, 0.4, 0.3, 0.7;
    const double c = std::cos(0.3);
    const double s = std::sin(0.3);
    Matrix rot(2, 2);
    rot << c, -s * Complex(0.0, 1.0), s, c * Complex(0.0, 1.0);
    return {
        {"iid_binary", SourceModel::iid(DensityOperator::diagonal({0.9, 0.1}))},
        {"iid_mixed", SourceModel::iid(DensityOperator::maximally_mixed(2))},
        {"iid_pure", SourceModel::iid(DensityOperator::pure(pure))},
        {"iid_tilted", SourceModel::iid(DensityOperator(tilted))},
        {"markov_hadamard", SourceModel::rotated_markov(reference_chain(), hadamard())},
        {"markov_plain", SourceModel::rotated_markov(reference_chain(), Matrix::Identity(2, 2))},
        {"markov_lazy", SourceModel::rotated_markov(lazy, rot)},
    };
}

namespace detail {

inline bool dense_ok(std::size_t d, std::size_t n, const SourceLimits& limits) {
    return qcomp::detail::bounded_power(d, n, limits.dense_cap).has_value();
}

inline std::vector<double> sorted_eigenvalues(const DensityOperator& rho) {
    const RealVector ev = rho.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

}  // namespace detail

// ---- spectral core -------------------------------------------------------

inline std::vector<SuiteResult> spectral_core(rnd::Rng& rng, std::size_t trials, const SourceLimits& limits) {
    SuiteResult eig{"spectral.eig_round_trip", 0.0};
    SuiteResult inv{"spectral.unitary_invariance", 0.0};
    SuiteResult pt{"spectral.partial_trace", 0.0};
    SuiteResult kr{"spectral.kron_associativity", 0.0};
    const std::vector<std::size_t> dims{2, 3, 4, 8, 16, 64, 256};
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t d = dims[t % dims.size()];
        if (d > limits.dense_cap) {
            eig.skip("dense_cap");
            inv.skip("dense_cap");
            continue;
        }
        const auto di = static_cast<Index>(d);
        const Matrix g = rnd::ginibre(di, di, rng);
        const Matrix a = g + g.adjoint();
        const Spectrum s = hermitian_eig(a);
        const Matrix back = s.vectors * s.values.cast<Complex>().asDiagonal() * s.vectors.adjoint();
        eig.record(1e-8 - (a - back).norm(), "dim " + std::to_string(d));
        const Matrix u = rnd::unitary(d, rng);
        inv.record(1e-9 - (hermitian_eigenvalues(u * a * u.adjoint()) - s.values).cwiseAbs().maxCoeff(),
                   "dim " + std::to_string(d));
    }
    for (std::size_t t = 0; t < trials; ++t) {
        const std::vector<std::size_t> sites{2, 1 + t % 3, 2};
        const std::size_t total = sites[0] * sites[1] * sites[2];
        if (total > limits.dense_cap) {
            pt.skip("dense_cap");
            continue;
        }
        const auto rho = rnd::density(total, rng);
        const std::vector<std::size_t> keep{t % 3};
        const Matrix r = partial_trace(rho.matrix(), sites, keep);
        pt.record(std::min(1e-10 - std::abs(r.trace().real() - 1.0), 1e-9 + hermitian_eigenvalues(r).minCoeff()));
        const Matrix x = rnd::ginibre(2, 2, rng);
        const Matrix y = rnd::ginibre(3, 1, rng);
        const Matrix z = rnd::ginibre(1, 2, rng);
        kr.record(1e-12 - max_abs(kron(kron(x, y), z) - kron(x, kron(y, z))));
    }
    return {eig, inv, pt, kr};
}

// ---- sources -------------------------------------------------------------

inline SuiteResult source_consistency(const std::vector<NamedSource>& sources, std::size_t n_max,
                                      const SourceLimits& limits) {
    SuiteResult r{"sources.consistency", 0.0};
    for (const auto& [name, src] : sources) {
        for (std::size_t n = 1; n <= n_max; ++n) {
            if (!detail::dense_ok(src.site_dim(), n + 1, limits)) {
                r.skip("dense_cap");
                continue;
            }
            const auto c = check_consistency(src, n, limits);
            r.record(c.tolerance - std::max(c.residual_trace_last, c.residual_trace_first),
                     name + " n=" + std::to_string(n));
        }
    }
    return r;
}

// Sorted class-spectrum eigenvalues against the dense eigensolver.
inline SuiteResult source_oracle(const std::vector<NamedSource>& sources, std::size_t n_max,
                                 const SourceLimits& limits) {
    SuiteResult r{"sources.class_vs_dense", 0.0};
    for (const auto& [name, src] : sources) {
        for (std::size_t n = 1; n <= n_max; ++n) {
            if (!detail::dense_ok(src.site_dim(), n, limits)) {
                r.skip("dense_cap");
                continue;
            }
            const auto fast = class_spectrum(src, n, limits).expanded_values();
            const auto dense = detail::sorted_eigenvalues(block_state(src, n, limits));
            double worst = fast.size() == dense.size() ? 0.0 : 1.0;
            for (std::size_t i = 0; i < std::min(fast.size(), dense.size()); ++i) {
                worst = std::max(worst, std::abs(fast[i] - dense[i]));
            }
            r.record(1e-9 - worst, name + " n=" + std::to_string(n));
        }
    }
    return r;
}

inline SuiteResult transition_count_paths(const std::vector<NamedSource>& sources, std::size_t n_max,
                                          const SourceLimits& limits) {
    SuiteResult r{"sources.counts_vs_words", 0.0};
    for (const auto& [name, src] : sources) {
        if (!src.as_markov()) continue;
        for (std::size_t n = 1; n <= n_max; ++n) {
            const auto w = class_spectrum(src, n, limits, MarkovPath::words).expanded_values();
            const auto c = class_spectrum(src, n, limits, MarkovPath::transition_counts).expanded_values();
            double worst = w.size() == c.size() ? 0.0 : 1.0;
            for (std::size_t i = 0; i < std::min(w.size(), c.size()); ++i) worst = std::max(worst, std::abs(w[i] - c[i]));
            r.record(1e-12 - worst, name + " n=" + std::to_string(n));
        }
    }
    return r;
}

// Sum of value * multiplicity is one, and S(rho^(n))/n - s is non-increasing.
inline std::vector<SuiteResult> source_entropy(const std::vector<NamedSource>& sources, std::size_t n_max,
                                               const SourceLimits& limits) {
    SuiteResult mass{"sources.unit_mass", 0.0};
    SuiteResult gap{"sources.entropy_gap_monotone", 0.0};
    for (const auto& [name, src] : sources) {
        const double s = entropy_rate_exact(src);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t n = 1; n <= n_max; ++n) {
            const auto cs = class_spectrum(src, n, limits);
            mass.record(1e-9 - std::abs(cs.total_mass() - 1.0), name + " n=" + std::to_string(n));
            const double g = von_neumann_entropy(cs) / static_cast<double>(n) - s;
            if (src.as_iid()) {
                gap.record(1e-9 - std::abs(g), name + " n=" + std::to_string(n));
            } else if (n >= 2) {
                gap.record(prev + 1e-12 - g, name + " n=" + std::to_string(n));
            }
            prev = g;
        }
    }
    return {mass, gap};
}

// ---- typicality ----------------------------------------------------------

inline SuiteResult beta_exhaustive(rnd::Rng& rng, std::size_t trials) {
    SuiteResult r{"typicality.beta_vs_exhaustive", 0.0};
    std::uniform_int_distribution<std::size_t> dim(1, 10);
    std::uniform_real_distribution<double> level(0.01, 0.95);
    for (std::size_t t = 0; t < trials; ++t) {
        const auto p = rnd::probability_vector(dim(rng), rng);
        const double eps = level(rng);
        const auto h = beta(DensityOperator::diagonal(p).spectrum(), eps);
        const auto best = oracle::min_count_exhaustive(p, eps);
        r.record(h.count == static_cast<double>(best) ? 0.0 : -1.0, "trial " + std::to_string(t));
    }
    return r;
}

inline SuiteResult eta_bruteforce(rnd::Rng& rng, std::size_t trials) {
    SuiteResult r{"typicality.eta_vs_projectors", 1e-9};
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t dim = 2 + t % 7;
        const auto rho = rnd::density(dim, rng);
        const auto s = rho.spectrum();
        for (std::size_t d = 1; d <= dim; ++d) {
            const double e = eta(s, d);
            r.record(-std::abs(e - oracle::eta_eigenprojector_scan(rho.matrix(), d)), "dim " + std::to_string(dim));
            if (dim <= 4) r.record(e - oracle::eta_random_projectors(rho.matrix(), d, 20, rng));
        }
    }
    return r;
}

// Window dimension bounds at every n, and window mass > 1 - eps at the
// largest n (Markov sources via transition counts).
inline std::vector<SuiteResult> typical_window(const std::vector<NamedSource>& sources, std::size_t n_large,
                                               const SourceLimits& limits) {
    SuiteResult bounds{"typicality.window_dimension", 0.0};
    SuiteResult mass{"typicality.window_mass_large_n", 0.0};
    for (const auto& [name, src] : sources) {
        const double s = entropy_rate_exact(src);
        for (double eps : {0.1, 0.3}) {
            for (std::size_t n : {4u, 10u, 20u, 60u}) {
                const auto t = typical_projector(class_spectrum(src, n, limits), n, s, eps);
                bounds.record(window_dimension_bounds_hold(t) ? 0.0 : -1.0, name + " n=" + std::to_string(n));
            }
            try {
                const auto t = typical_projector(class_spectrum(src, n_large, limits), n_large, s, eps);
                mass.record(t.mass - (1.0 - eps), name + " eps=" + std::to_string(eps));
            } catch (const capacity_error&) {
                mass.skip("spectral_cap");
            }
        }
    }
    return {bounds, mass};
}

inline SuiteResult relative_entropy_monotonicity(rnd::Rng& rng, std::size_t trials) {
    SuiteResult r{"typicality.relative_entropy_monotone", 1e-9};
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t d = 2 + t % 3;
        const auto rho = rnd::density(d, rng);
        const auto sigma = rnd::density(d, rng);
        const auto ch = rnd::channel(d, rng);
        const double before = relative_entropy(rho, sigma);
        const double after = relative_entropy(apply(ch, rho), apply(ch, sigma));
        r.record(std::isinf(before) ? 0.0 : before - after, "trial " + std::to_string(t));
    }
    return r;
}

// ---- channels and schemes ------------------------------------------------

inline std::vector<SuiteResult> scheme_properties(const std::vector<NamedSource>& sources, std::size_t n_max,
                                                  const SourceLimits& limits) {
    SuiteResult complete{"channels.scheme_completeness", 1e-10};
    SuiteResult tp{"channels.trace_preservation", 1e-9};
    SuiteResult sandwich{"channels.scheme_mass", 1e-12};
    SuiteResult entropy{"channels.compressed_entropy", 1e-9};
    SuiteResult fe{"channels.fe_vs_mass", 1e-9};
    for (const auto& [name, src] : sources) {
        for (std::size_t n = 1; n <= n_max; ++n) {
            if (!detail::dense_ok(src.site_dim(), n, limits)) {
                complete.skip("dense_cap");
                continue;
            }
            for (double eps : {0.1, 0.3}) {
                const auto s = make_scheme(src, n, EpsilonLevel{eps}, limits);
                const auto rt = s.round_trip();
                const std::string tag = name + " n=" + std::to_string(n);
                complete.record(-s.compressor.completeness_error(), tag);
                complete.record(-s.decompressor.completeness_error(), tag);
                complete.record(-rt.completeness_error(), tag);
                tp.record(-std::abs(rt.apply(s.state.matrix()).trace().real() - 1.0), tag);
                sandwich.record(s.subspace.expectation(s.state.matrix()) - (1.0 - eps), tag);
                entropy.record(std::log2(static_cast<double>(s.rank())) -
                                   von_neumann_entropy(apply(s.compressor, s.state)),
                               tag);
                const double m = s.captured_mass;
                fe.record(entanglement_fidelity_kraus(s.state, rt) - m * m, tag);
            }
        }
    }
    return {complete, tp, sandwich, entropy, fe};
}

// ---- fidelity ------------------------------------------------------------

struct FidelitySuites {
    SuiteResult estimate{"fidelity.estimate", 1e-9};
    SuiteResult relation{"fidelity.relation_chain", 1e-9};
    SuiteResult routes{"fidelity.fe_routes", 0.0};
    SuiteResult completeness{"fidelity.channel_completeness", 1e-10};
    SuiteResult monotone{"fidelity.monotonicity", 1e-9};
    SuiteResult concave{"fidelity.joint_concavity", 1e-9};
    SuiteResult symmetric{"fidelity.symmetry", 1e-9};
    SuiteResult nuclear{"fidelity.nuclear_route", 1e-9};
    SuiteResult fannes{"fidelity.fannes", 1e-9};

    std::vector<SuiteResult> all() const {
        return {estimate, relation, routes, completeness, monotone, concave, symmetric, nuclear, fannes};
    }
};

// Random (rho, sigma, channel) triples on dims {2,3,4}.
inline FidelitySuites fidelity_identities(rnd::Rng& rng, std::size_t trials, const SourceLimits& limits) {
    FidelitySuites f;
    std::uniform_real_distribution<double> lam(0.0, 1.0);
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t d = 2 + t % 3;
        const std::string tag = "trial " + std::to_string(t);
        const auto rho = rnd::density(d, rng);
        const auto sigma = rnd::density(d, rng);
        const auto ch = rnd::channel(d, rng);
        f.completeness.record(-ch.completeness_error(), tag);

        const auto rep = check_inequalities(rho, sigma, Ensemble::eigen(rho), ch);
        f.estimate.record(std::min(rep.slack.at("estimate.lower"), rep.slack.at("estimate.upper")), tag);
        f.relation.record(std::min({rep.slack.at("relation.fe_nonneg"), rep.slack.at("relation.fe_le_fbar"),
                                    rep.slack.at("relation.fbar_le_f"), rep.slack.at("relation.f_le_one")}),
                          tag);
        f.fannes.record(rep.slack.at("fannes"), tag);

        if (d * d <= limits.dense_cap) {
            const double k = entanglement_fidelity_kraus(rho, ch);
            const double p = entanglement_fidelity_purification(rho, ch, limits.dense_cap);
            const double q = entanglement_fidelity_purification(rho, ch, limits.dense_cap, rnd::unitary(d, rng));
            f.routes.record(1e-8 - std::max(std::abs(k - p), std::abs(k - q)), tag);
        } else {
            f.routes.skip("dense_cap");
        }

        const double frs = fidelity(rho, sigma);
        f.monotone.record(fidelity(apply(ch, rho), apply(ch, sigma)) - frs, tag);
        f.symmetric.record(-std::abs(frs - fidelity(sigma, rho)), tag);
        f.nuclear.record(-std::abs(frs - fidelity_nuclear(rho, sigma)), tag);

        const auto rho2 = rnd::density(d, rng);
        const auto sigma2 = rnd::density(d, rng);
        const double l = lam(rng);
        const auto mr = DensityOperator::trusted(l * rho.matrix() + (1 - l) * rho2.matrix());
        const auto ms = DensityOperator::trusted(l * sigma.matrix() + (1 - l) * sigma2.matrix());
        f.concave.record(fidelity(mr, ms) - (l * frs + (1 - l) * fidelity(rho2, sigma2)), tag);
    }
    return f;
}

// Every suite with the given seed; dense work is gated by limits.dense_cap.
inline std::vector<SuiteResult> run_all(std::uint64_t seed, const SourceLimits& limits,
                                        const std::vector<NamedSource>& sources, std::size_t fidelity_trials = 1000) {
    rnd::Rng rng(seed);
    std::vector<SuiteResult> out;
    auto append = [&](std::vector<SuiteResult> v) { out.insert(out.end(), v.begin(), v.end()); };
    append(spectral_core(rng, 28, limits));
    out.push_back(source_consistency(sources, 7, limits));
    out.push_back(source_oracle(sources, 8, limits));
    out.push_back(transition_count_paths(sources, 12, limits));
    append(source_entropy(sources, 16, limits));
    out.push_back(beta_exhaustive(rng, 50));
    out.push_back(eta_bruteforce(rng, 14));
    append(typical_window(sources, 1000, limits));
    out.push_back(relative_entropy_monotonicity(rng, 200));
    append(scheme_properties(sources, 6, limits));
    append(fidelity_identities(rng, fidelity_trials, limits).all());
    return out;
}

}  // namespace qcomp::validation

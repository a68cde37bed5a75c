// typicality.hpp - entropies, typical subspaces, high-probability subspaces
//
// All routines consume a ClassSpectrum so the same code serves dense spectra
// (one class per eigenvector) and structured spectra with astronomically
// large multiplicities. Dimensions are carried as log2 values.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcomp/linalg.hpp"
#include "qcomp/sources.hpp"

namespace qcomp {

inline constexpr double infinite_divergence = std::numeric_limits<double>::infinity();

inline double von_neumann_entropy(const ClassSpectrum& cs) {
    double h = 0.0;
    for (const auto& c : cs.classes) {
        if (c.log2_value == detail::neg_inf) continue;
        h -= c.mass() * c.log2_value;
    }
    return h;
}

inline double von_neumann_entropy(const Spectrum& s) {
    double h = 0.0;
    for (Index i = 0; i < s.values.size(); ++i) h += detail::entropy_term(std::max(s.values[i], 0.0));
    return h;
}

inline double von_neumann_entropy(const DensityOperator& rho) {
    const RealVector ev = rho.eigenvalues();
    double h = 0.0;
    for (Index i = 0; i < ev.size(); ++i) h += detail::entropy_term(ev[i]);
    return h;
}

// S(rho || sigma) in bits; +infinity when supp(rho) is not inside supp(sigma).
inline double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma) {
    if (rho.dim() != sigma.dim()) throw dimension_error("relative_entropy: dimension mismatch");
    const RealVector rv = rho.eigenvalues();
    double self = 0.0;
    for (Index i = 0; i < rv.size(); ++i) {
        if (rv[i] > 0.0) self += rv[i] * std::log2(rv[i]);
    }
    const Spectrum ss = sigma.spectrum();
    const RealVector weight = (ss.vectors.adjoint() * rho.matrix() * ss.vectors).diagonal().real();
    double cross = 0.0;
    for (Index k = 0; k < weight.size(); ++k) {
        if (ss.values[k] > tol::numerical_zero) {
            cross += weight[k] * std::log2(ss.values[k]);
        } else if (weight[k] > tol::psd_clamp) {
            return infinite_divergence;
        }
    }
    return std::max(0.0, self - cross);
}

// One chosen class and how many of its eigenvectors were taken.
struct Selection {
    std::size_t class_index = 0;
    std::uint64_t key = 0;   // eigenvector index for dense-derived spectra
    double count = 0.0;
};

struct TypicalSubspace {
    std::size_t n = 0;
    double epsilon = 0.0;
    double entropy_rate = 0.0;
    double log2_lower = 0.0;   // log2 of the window endpoints
    double log2_upper = 0.0;
    std::vector<Selection> selected;
    double count = 0.0;
    double log2_dim = detail::neg_inf;
    double mass = 0.0;

    bool empty() const { return selected.empty(); }
};

struct HighProbSubspace {
    std::size_t n = 0;
    double epsilon = 0.0;
    std::vector<Selection> selected;
    double count = 0.0;
    double log2_dim = 0.0;   // beta_{eps,n}
    double mass = 0.0;
    double smallest_value = 0.0;

    // Minimality witness: dropping the smallest selected eigenvalue loses the target.
    double mass_without_smallest() const { return mass - smallest_value; }
};

namespace detail {

inline double log2_add(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log2(1.0 + std::exp2(lo - hi));
}

inline void require_level(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw std::invalid_argument("epsilon must lie in (0,1), got " + std::to_string(epsilon));
    }
}

// Tolerance on the log2 window endpoints; eigenvalues exactly on the
// boundary belong to the closed interval.
inline constexpr double window_slack = 1e-12;

}  // namespace detail

// Eigenvectors whose eigenvalue lies in [2^{-n(s+eps)}, 2^{-n(s-eps)}].
inline TypicalSubspace typical_projector(const ClassSpectrum& cs, std::size_t n, double s, double epsilon) {
    detail::require_level(epsilon);
    if (s < 0.0) throw std::invalid_argument("entropy rate must be non-negative");
    TypicalSubspace t;
    t.n = n;
    t.epsilon = epsilon;
    t.entropy_rate = s;
    t.log2_lower = -static_cast<double>(n) * (s + epsilon);
    t.log2_upper = -static_cast<double>(n) * (s - epsilon);
    for (std::size_t i = 0; i < cs.classes.size(); ++i) {
        const auto& c = cs.classes[i];
        if (c.log2_value < t.log2_lower - detail::window_slack ||
            c.log2_value > t.log2_upper + detail::window_slack) {
            continue;
        }
        t.selected.push_back({i, c.key, c.multiplicity});
        t.count += c.multiplicity;
        t.log2_dim = detail::log2_add(t.log2_dim, c.log2_multiplicity);
        t.mass += c.mass();
    }
    return t;
}

inline TypicalSubspace typical_projector(const Spectrum& s, std::size_t n, double rate, double epsilon) {
    return typical_projector(to_classes(s), n, rate, epsilon);
}

// Exact consequences of the window: count <= 2^{n(s+eps)} and
// count >= mass * 2^{n(s-eps)}.
inline bool window_dimension_bounds_hold(const TypicalSubspace& t, double slack = 1e-9) {
    if (t.empty()) return true;
    const double n = static_cast<double>(t.n);
    const bool upper = t.log2_dim <= n * (t.entropy_rate + t.epsilon) + slack;
    const bool lower = t.log2_dim >= std::log2(t.mass) + n * (t.entropy_rate - t.epsilon) - slack;
    return upper && lower;
}

// Smallest projector with tr(rho q) >= 1 - eps. The top-k eigenvalue sum is
// the maximum of tr(rho q) over rank-k projectors, so the greedy count is
// minimal. A class straddling the threshold is consumed partially.
inline HighProbSubspace beta(const ClassSpectrum& cs, double epsilon) {
    detail::require_level(epsilon);
    HighProbSubspace h;
    h.n = cs.sites;
    h.epsilon = epsilon;
    const double target = 1.0 - epsilon;
    double log2_count = detail::neg_inf;
    for (std::size_t i = 0; i < cs.classes.size(); ++i) {
        const auto& c = cs.classes[i];
        if (c.log2_value == detail::neg_inf) break;
        const double m = c.mass();
        const double value = c.value();
        if (h.mass + m < target) {
            h.selected.push_back({i, c.key, c.multiplicity});
            h.count += c.multiplicity;
            log2_count = detail::log2_add(log2_count, c.log2_multiplicity);
            h.mass += m;
            h.smallest_value = value;
            continue;
        }
        const double log2_need = std::log2(target - h.mass) - c.log2_value;
        double need;
        if (log2_need < 52.0) {
            need = std::max(1.0, std::ceil(std::exp2(log2_need)));
            if (h.mass + need * value < target) need += 1.0;
            need = std::min(need, c.multiplicity);
        } else {
            need = std::min(std::exp2(log2_need), c.multiplicity);
        }
        h.selected.push_back({i, c.key, need});
        h.count += need;
        log2_count = detail::log2_add(log2_count, std::log2(need));
        h.mass += std::exp2(std::log2(need) + c.log2_value);
        h.smallest_value = value;
        break;
    }
    h.log2_dim = log2_count == detail::neg_inf ? 0.0 : log2_count;
    return h;
}

inline HighProbSubspace beta(const Spectrum& s, double epsilon) { return beta(to_classes(s), epsilon); }

// Sum of the d largest eigenvalues: max tr(rho P) over rank-d projectors.
// `d` is an integer-valued count, possibly far beyond 2^53.
inline double eta(const ClassSpectrum& cs, double d) {
    if (!(d >= 1.0) || std::floor(d) != d || std::log2(d) > cs.log2_total_dim + 1e-12) {
        throw std::out_of_range("eta: d must be an integer in [1, total dimension], got " + std::to_string(d));
    }
    double left = d;
    double sum = 0.0;
    for (const auto& c : cs.classes) {
        if (left <= 0.0) break;
        const double take = std::min(left, c.multiplicity);
        if (c.log2_value != detail::neg_inf) sum += std::exp2(std::log2(take) + c.log2_value);
        left -= take;
    }
    return std::min(sum, 1.0);
}

inline double eta(const Spectrum& s, std::size_t d) { return eta(to_classes(s), static_cast<double>(d)); }

// floor(2^{nR}), clamped to the total dimension; beyond 2^52 the floor is
// below double resolution and 2^{nR} itself is returned.
inline double rate_dimension(std::size_t n, double rate, double log2_total_dim) {
    const double log2_d = std::min(static_cast<double>(n) * rate, log2_total_dim);
    if (log2_d >= 52.0) return std::exp2(log2_d);
    return std::min(std::floor(std::exp2(log2_d) + 1e-9), std::exp2(log2_total_dim));
}

struct BetaRate {
    std::size_t n = 0;
    double beta = 0.0;
    double beta_per_n = 0.0;
    double mass = 0.0;
};

inline std::vector<BetaRate> beta_rate_sweep(const SourceModel& src, double epsilon,
                                             std::span<const std::size_t> n_list,
                                             const SourceLimits& limits = {}) {
    std::vector<BetaRate> rows;
    rows.reserve(n_list.size());
    for (std::size_t n : n_list) {
        const HighProbSubspace h = beta(class_spectrum(src, n, limits), epsilon);
        rows.push_back({n, h.log2_dim, h.log2_dim / static_cast<double>(n), h.mass});
    }
    return rows;
}

}  // namespace qcomp

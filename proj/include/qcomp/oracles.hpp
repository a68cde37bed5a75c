// oracles.hpp - brute-force reference computations used to cross-check the
// fast paths. Deliberately naive; only meant for small inputs.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qcomp/linalg.hpp"
#include "qcomp/random.hpp"

namespace qcomp::oracle {

// Fewest eigenvectors with total mass >= 1 - eps, over all 2^dim subsets.
inline std::size_t min_count_exhaustive(std::span<const double> values, double epsilon) {
    if (values.size() > 20) throw std::length_error("min_count_exhaustive: dim > 20");
    const std::uint32_t subsets = 1u << values.size();
    std::size_t best = values.size() + 1;
    for (std::uint32_t mask = 1; mask < subsets; ++mask) {
        const auto pc = static_cast<std::size_t>(std::popcount(mask));
        if (pc >= best) continue;
        double mass = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (mask & (1u << i)) mass += values[i];
        }
        if (mass >= 1.0 - epsilon) best = pc;
    }
    return best;
}

// max tr(rho P) over projectors onto d of rho's eigenvectors, evaluated as
// matrix traces rather than eigenvalue sums.
inline double eta_eigenprojector_scan(const Matrix& rho, std::size_t d) {
    const Spectrum s = hermitian_eig(rho);
    const std::size_t dim = s.size();
    if (dim > 16) throw std::length_error("eta_eigenprojector_scan: dim > 16");
    double best = -1.0;
    for (std::uint32_t mask = 0; mask < (1u << dim); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != d) continue;
        Matrix p = Matrix::Zero(rho.rows(), rho.cols());
        for (std::size_t i = 0; i < dim; ++i) {
            if (mask & (1u << i)) p += s.vectors.col(static_cast<Index>(i)) * s.vectors.col(static_cast<Index>(i)).adjoint();
        }
        best = std::max(best, (rho * p).trace().real());
    }
    return best;
}

// Largest tr(rho P) seen over `trials` Haar-random rank-d projectors.
inline double eta_random_projectors(const Matrix& rho, std::size_t d, std::size_t trials, rnd::Rng& rng) {
    double best = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const Projector p = rnd::projector(static_cast<std::size_t>(rho.rows()), d, rng);
        best = std::max(best, p.expectation(rho));
    }
    return best;
}

// 2 max_P tr(P A) over projectors onto subsets of A's eigenvectors.
inline double trace_norm_projector_scan(const Matrix& a) {
    const Spectrum s = hermitian_eig(a);
    const std::size_t dim = s.size();
    if (dim > 16) throw std::length_error("trace_norm_projector_scan: dim > 16");
    double best = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << dim); ++mask) {
        Matrix p = Matrix::Zero(a.rows(), a.cols());
        for (std::size_t i = 0; i < dim; ++i) {
            if (mask & (1u << i)) p += s.vectors.col(static_cast<Index>(i)) * s.vectors.col(static_cast<Index>(i)).adjoint();
        }
        best = std::max(best, (p * a).trace().real());
    }
    // tr A = 0 for differences of states, otherwise account for it
    return 2.0 * best - a.trace().real();
}

// Every word probability pi_{i1} M_{i1 i2} ... M_{i(n-1) in}, word order.
inline std::vector<double> markov_word_values(const RealMatrix& m, const RealVector& pi, std::size_t n) {
    const auto d = static_cast<std::size_t>(m.rows());
    std::size_t total = 1;
    for (std::size_t k = 0; k < n; ++k) total *= d;
    std::vector<double> out(total);
    std::vector<std::size_t> digits(n);
    for (std::size_t w = 0; w < total; ++w) {
        std::size_t x = w;
        for (std::size_t k = n; k-- > 0;) {
            digits[k] = x % d;
            x /= d;
        }
        double p = pi[static_cast<Index>(digits[0])];
        for (std::size_t k = 1; k < n; ++k) p *= m(static_cast<Index>(digits[k - 1]), static_cast<Index>(digits[k]));
        out[w] = p;
    }
    return out;
}

// Binary i.i.d. source with letter probabilities (p, 1-p), p >= 1/2: the
// block spectrum has value p^(n-k) (1-p)^k with multiplicity C(n,k).
// Both helpers walk k upwards in long double.
namespace detail {

inline long double log_binomial(std::size_t n, std::size_t k) {
    return std::lgamma(static_cast<long double>(n) + 1.0L) - std::lgamma(static_cast<long double>(k) + 1.0L) -
           std::lgamma(static_cast<long double>(n - k) + 1.0L);
}

}  // namespace detail

// Sum of the d largest eigenvalues, d = 2^log2_d.
inline long double binary_iid_eta(long double p, std::size_t n, long double log2_d) {
    if (p < 0.5L) p = 1.0L - p;
    const long double q = 1.0L - p;
    long double left = std::exp2(log2_d);
    long double sum = 0.0L;
    for (std::size_t k = 0; k <= n && left > 0.0L; ++k) {
        const long double mult = std::exp(detail::log_binomial(n, k));
        const long double take = std::min(left, mult);
        sum += take * std::pow(p, static_cast<long double>(n - k)) * std::pow(q, static_cast<long double>(k));
        left -= take;
    }
    return sum;
}

// log2 of the smallest eigenvector count with mass >= 1 - eps.
inline long double binary_iid_beta(long double p, std::size_t n, long double epsilon) {
    if (p < 0.5L) p = 1.0L - p;
    const long double q = 1.0L - p;
    const long double target = 1.0L - epsilon;
    long double mass = 0.0L;
    long double count = 0.0L;
    for (std::size_t k = 0; k <= n; ++k) {
        const long double value = std::pow(p, static_cast<long double>(n - k)) * std::pow(q, static_cast<long double>(k));
        const long double mult = std::round(std::exp(detail::log_binomial(n, k)));
        if (mass + mult * value < target) {
            mass += mult * value;
            count += mult;
            continue;
        }
        long double need = std::ceil((target - mass) / value);
        if (mass + need * value < target) need += 1.0L;
        count += std::min(need, mult);
        break;
    }
    return std::log2(count);
}

}  // namespace qcomp::oracle

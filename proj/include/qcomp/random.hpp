// random.hpp - seeded random states, unitaries and channels for property tests
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qcomp/channels.hpp"
#include "qcomp/linalg.hpp"

namespace qcomp::rnd {

using Rng = std::mt19937_64;

// Entries with independent standard normal real and imaginary parts.
inline Matrix ginibre(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            const double re = g(rng);
            const double im = g(rng);
            m(i, j) = Complex(re, im);
        }
    }
    return m;
}

// G G^dagger / tr, full rank almost surely.
inline DensityOperator density(std::size_t dim, Rng& rng) {
    const auto d = static_cast<Index>(dim);
    const Matrix g = ginibre(d, d, rng);
    Matrix m = g * g.adjoint();
    m /= m.trace().real();
    return DensityOperator::trusted(0.5 * (m + m.adjoint()));
}

inline Vector pure_vector(std::size_t dim, Rng& rng) {
    Vector v = ginibre(static_cast<Index>(dim), 1, rng).col(0);
    return v / v.norm();
}

// Haar unitary: QR of a Ginibre matrix with the phases of R's diagonal removed.
inline Matrix unitary(std::size_t dim, Rng& rng) {
    const auto d = static_cast<Index>(dim);
    Eigen::HouseholderQR<Matrix> qr(ginibre(d, d, rng));
    Matrix q = qr.householderQ() * Matrix::Identity(d, d);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < d; ++i) {
        const double a = std::abs(r(i, i));
        if (a > 0.0) q.col(i) *= r(i, i) / a;
    }
    return q;
}

// Blocks of a random isometry dim -> kraus_count*dim.
inline KrausChannel isometry_channel(std::size_t dim, std::size_t kraus_count, Rng& rng) {
    const auto d = static_cast<Index>(dim);
    const auto k = static_cast<Index>(kraus_count);
    const Matrix v = unitary(dim * kraus_count, rng).leftCols(d);
    std::vector<KrausOperator> ops;
    for (Index i = 0; i < k; ++i) ops.emplace_back(Matrix(v.middleRows(i * d, d)));
    return KrausChannel(dim, dim, std::move(ops));
}

// Compression into a random rank-`rank` subspace followed by its embedding.
inline KrausChannel projective_round_trip(std::size_t dim, std::size_t rank, Rng& rng) {
    const auto d = static_cast<Index>(dim);
    const auto r = static_cast<Index>(rank);
    const Matrix u = unitary(dim, rng);
    Projector p(u.leftCols(r));
    const KrausChannel c = build_compression(p, u.col(0), Matrix(u.rightCols(d - r)));
    return compose(c, build_decompression(p));
}

inline Projector projector(std::size_t dim, std::size_t rank, Rng& rng) {
    return Projector(unitary(dim, rng).leftCols(static_cast<Index>(rank)));
}

// Half isometry channels with 1..4 Kraus operators, half projective round trips.
inline KrausChannel channel(std::size_t dim, Rng& rng) {
    std::uniform_int_distribution<int> coin(0, 1);
    if (coin(rng) == 0) {
        std::uniform_int_distribution<std::size_t> k(1, 4);
        return isometry_channel(dim, k(rng), rng);
    }
    std::uniform_int_distribution<std::size_t> r(1, dim);
    return projective_round_trip(dim, r(rng), rng);
}

inline std::vector<double> probability_vector(std::size_t dim, Rng& rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(dim);
    double total = 0.0;
    for (auto& x : p) total += (x = e(rng));
    for (auto& x : p) x /= total;
    return p;
}

}  // namespace qcomp::rnd

// linalg.hpp - dense complex linear algebra for density operators
//
// Hermitian eigendecomposition (LAPACK zheevd), Kronecker products, partial
// traces over arbitrary site sets, PSD matrix functions and the trace norm.
// Everything here is dense; structured spectra live in sources.hpp.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include "qcomp/error.hpp"

namespace qcomp {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace tol {
inline constexpr double hermitian = 1e-10;
inline constexpr double psd_clamp = 1e-10;
inline constexpr double unit_trace = 1e-10;
inline constexpr double orthonormal = 1e-10;
inline constexpr double idempotent = 1e-9;
// eigenvalues this close to zero are zero inside square roots
inline constexpr double numerical_zero = 1e-14;
}  // namespace tol

inline double max_abs(const Matrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline double max_asymmetry(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw dimension_error("max_asymmetry: matrix is not square");
    }
    return max_abs(a - a.adjoint());
}

// Eigenpairs ordered by non-increasing eigenvalue; column i of `vectors`
// belongs to values[i].
struct Spectrum {
    RealVector values;
    Matrix vectors;

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
    Vector vector(std::size_t i) const { return vectors.col(static_cast<Index>(i)); }
    double sum() const { return values.sum(); }
};

namespace detail {

inline void require_square(const Matrix& a, const char* who) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        std::ostringstream os;
        os << who << ": expected a non-empty square matrix, got " << a.rows() << "x" << a.cols();
        throw dimension_error(os.str());
    }
}

inline void require_hermitian(const Matrix& a, double tolerance, const char* who) {
    require_square(a, who);
    if (!a.allFinite()) {
        throw invariant_error("finite", std::string(who) + ": non-finite entry");
    }
    const double asym = max_asymmetry(a);
    if (asym > tolerance) {
        std::ostringstream os;
        os << who << ": max |A - A^dagger| = " << asym << " exceeds " << tolerance;
        throw invariant_error("hermitian", os.str());
    }
}

// Overwrites `work` with eigenvectors when `vectors` is set. Ascending order.
inline RealVector zheevd(Matrix& work, bool vectors) {
    const auto n = static_cast<lapack_int>(work.rows());
    RealVector w(n);
    const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'U', n,
                                           work.data(), n, w.data());
    if (info != 0) {
        throw std::runtime_error("zheevd failed with info = " + std::to_string(info));
    }
    return w;
}

}  // namespace detail

inline Spectrum hermitian_eig(const Matrix& a, double tolerance = tol::hermitian) {
    detail::require_hermitian(a, tolerance, "hermitian_eig");
    Matrix work = 0.5 * (a + a.adjoint());
    const RealVector ascending = detail::zheevd(work, true);
    Spectrum s;
    s.values = ascending.reverse();
    s.vectors = work.rowwise().reverse();
    return s;
}

// Eigenvalues only, non-increasing.
inline RealVector hermitian_eigenvalues(const Matrix& a, double tolerance = tol::hermitian) {
    detail::require_hermitian(a, tolerance, "hermitian_eigenvalues");
    Matrix work = 0.5 * (a + a.adjoint());
    return detail::zheevd(work, false).reverse();
}

// Values in [-clamp, 0) become 0; anything lower is an error.
inline void clamp_nonnegative(RealVector& values, double clamp = tol::psd_clamp) {
    for (Index i = 0; i < values.size(); ++i) {
        if (values[i] < -clamp) {
            std::ostringstream os;
            os << "eigenvalue " << values[i] << " below -" << clamp;
            throw invariant_error("psd", os.str());
        }
        if (values[i] < 0.0) values[i] = 0.0;
    }
}

// V f(Lambda) V^dagger
template <class F>
Matrix spectral_function(const Spectrum& s, F&& f) {
    RealVector fv(s.values.size());
    for (Index i = 0; i < fv.size(); ++i) fv[i] = f(s.values[i]);
    return s.vectors * fv.cast<Complex>().asDiagonal() * s.vectors.adjoint();
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    const Index rb = b.rows();
    const Index cb = b.cols();
    Matrix k(a.rows() * rb, a.cols() * cb);
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            k.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
        }
    }
    return k;
}

inline Vector kron(const Vector& a, const Vector& b) {
    Vector k(a.size() * b.size());
    for (Index i = 0; i < a.size(); ++i) k.segment(i * b.size(), b.size()) = a[i] * b;
    return k;
}

inline Matrix kron_power(const Matrix& a, std::size_t n) {
    Matrix out = Matrix::Identity(1, 1);
    for (std::size_t i = 0; i < n; ++i) out = kron(out, a);
    return out;
}

inline double trace_norm(const Matrix& a) {
    return hermitian_eigenvalues(a).cwiseAbs().sum();
}

// Principal square root of a PSD matrix.
inline Matrix matrix_sqrt_psd(const Matrix& a) {
    Spectrum s = hermitian_eig(a);
    clamp_nonnegative(s.values);
    return spectral_function(s, [](double x) { return x <= tol::numerical_zero ? 0.0 : std::sqrt(x); });
}

inline std::size_t checked_product(std::span<const std::size_t> dims) {
    std::size_t p = 1;
    for (std::size_t d : dims) {
        if (d == 0) throw dimension_error("site dimension must be positive");
        p *= d;
    }
    return p;
}

// Trace out every site not listed in `keep`. Sites are ordered as in the
// Kronecker product: site 0 is the leftmost factor.
inline Matrix partial_trace(const Matrix& a, std::span<const std::size_t> dims,
                            std::span<const std::size_t> keep) {
    detail::require_square(a, "partial_trace");
    if (dims.empty()) throw dimension_error("partial_trace: empty site list");
    const std::size_t total = checked_product(dims);
    if (total != static_cast<std::size_t>(a.rows())) {
        std::ostringstream os;
        os << "partial_trace: product of site dims " << total << " != matrix dim " << a.rows();
        throw dimension_error(os.str());
    }
    std::vector<std::size_t> kept(keep.begin(), keep.end());
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    if (kept.empty()) throw dimension_error("partial_trace: keep set is empty");
    if (kept.back() >= dims.size()) throw dimension_error("partial_trace: site index out of range");

    const std::size_t sites = dims.size();
    std::vector<std::size_t> stride(sites, 1);
    for (std::size_t k = sites - 1; k > 0; --k) stride[k - 1] = stride[k] * dims[k];

    std::vector<bool> is_kept(sites, false);
    for (std::size_t k : kept) is_kept[k] = true;

    // Offsets into the full index for every multi-index of a site group.
    auto offsets = [&](bool want_kept) {
        std::vector<std::size_t> offs{0};
        for (std::size_t k = 0; k < sites; ++k) {
            if (is_kept[k] != want_kept) continue;
            std::vector<std::size_t> next;
            next.reserve(offs.size() * dims[k]);
            for (std::size_t base : offs) {
                for (std::size_t j = 0; j < dims[k]; ++j) next.push_back(base + j * stride[k]);
            }
            offs = std::move(next);
        }
        return offs;
    };
    const auto keep_off = offsets(true);
    const auto trace_off = offsets(false);

    const auto dk = static_cast<Index>(keep_off.size());
    Matrix out = Matrix::Zero(dk, dk);
    for (Index r = 0; r < dk; ++r) {
        for (Index c = 0; c < dk; ++c) {
            Complex acc = 0.0;
            for (std::size_t t : trace_off) {
                acc += a(static_cast<Index>(keep_off[r] + t), static_cast<Index>(keep_off[c] + t));
            }
            out(r, c) = acc;
        }
    }
    return out;
}

namespace detail {

// X <- (1 x .. x U x .. x 1) X, with U acting on the digit of weight `stride`.
inline void apply_site_left(Matrix& x, const Matrix& u, Index stride) {
    const Index d = u.rows();
    const Index block = d * stride;
    std::vector<Complex> tmp(static_cast<std::size_t>(d));
    for (Index c = 0; c < x.cols(); ++c) {
        for (Index hi = 0; hi < x.rows(); hi += block) {
            for (Index lo = 0; lo < stride; ++lo) {
                for (Index j = 0; j < d; ++j) tmp[j] = x(hi + j * stride + lo, c);
                for (Index i = 0; i < d; ++i) {
                    Complex acc = 0.0;
                    for (Index j = 0; j < d; ++j) acc += u(i, j) * tmp[j];
                    x(hi + i * stride + lo, c) = acc;
                }
            }
        }
    }
}

}  // namespace detail

// U^{(x)n} A (U^{(x)n})^dagger without forming the d^n x d^n unitary.
inline Matrix conjugate_sites(const Matrix& a, const Matrix& u, std::size_t sites) {
    detail::require_square(a, "conjugate_sites");
    detail::require_square(u, "conjugate_sites");
    Index stride = 1;
    for (std::size_t k = 0; k < sites; ++k) stride *= u.rows();
    if (stride != a.rows()) throw dimension_error("conjugate_sites: d^n != matrix dim");
    Matrix y = a;
    for (Index s = 1; s < stride; s *= u.rows()) detail::apply_site_left(y, u, s);
    Matrix z = y.adjoint();
    for (Index s = 1; s < stride; s *= u.rows()) detail::apply_site_left(z, u, s);
    return z.adjoint();
}

inline bool is_unitary(const Matrix& u, double tolerance = tol::orthonormal) {
    if (u.rows() != u.cols()) return false;
    return max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())) <= tolerance;
}

inline Matrix hadamard() {
    Matrix h(2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    h << r, r, r, -r;
    return h;
}

// Trace-one positive semidefinite Hermitian matrix.
class DensityOperator {
public:
    // Full validation including an eigenvalue solve for positivity.
    explicit DensityOperator(Matrix m) : m_(validated(std::move(m), true, tol::unit_trace)) {}

    // Hermiticity and trace are checked; positivity is taken on trust. For
    // outputs of positivity-preserving maps (partial trace, channels, kron).
    static DensityOperator trusted(Matrix m, double trace_tolerance = tol::unit_trace) {
        return DensityOperator(validated(std::move(m), false, trace_tolerance), tag{});
    }

    static DensityOperator pure(const Vector& psi) {
        const double norm = psi.norm();
        if (std::abs(norm - 1.0) > tol::orthonormal) {
            throw invariant_error("unit-norm", "pure state vector has norm " + std::to_string(norm));
        }
        return DensityOperator(Matrix(psi * psi.adjoint()), tag{});
    }

    static DensityOperator maximally_mixed(std::size_t dim) {
        const auto d = static_cast<Index>(dim);
        return DensityOperator(Matrix(Matrix::Identity(d, d) / static_cast<double>(dim)), tag{});
    }

    static DensityOperator diagonal(std::span<const double> p) {
        RealVector v(static_cast<Index>(p.size()));
        for (std::size_t i = 0; i < p.size(); ++i) v[static_cast<Index>(i)] = p[i];
        return DensityOperator(Matrix(v.cast<Complex>().asDiagonal()));
    }

    static DensityOperator diagonal(std::initializer_list<double> p) {
        return diagonal(std::span<const double>(p.begin(), p.size()));
    }

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    const Matrix& matrix() const { return m_; }

    // Eigenvalues clamped to be non-negative.
    Spectrum spectrum() const {
        Spectrum s = hermitian_eig(m_);
        clamp_nonnegative(s.values);
        return s;
    }

    RealVector eigenvalues() const {
        RealVector v = hermitian_eigenvalues(m_);
        clamp_nonnegative(v);
        return v;
    }

    double purity() const { return (m_ * m_).trace().real(); }

private:
    struct tag {};
    DensityOperator(Matrix m, tag) : m_(std::move(m)) {}

    static Matrix validated(Matrix m, bool check_psd, double trace_tolerance) {
        detail::require_hermitian(m, tol::hermitian, "DensityOperator");
        const Complex tr = m.trace();
        if (std::abs(tr - 1.0) > trace_tolerance) {
            std::ostringstream os;
            os << "trace " << tr.real() << (tr.imag() >= 0 ? "+" : "") << tr.imag() << "i";
            throw invariant_error("unit-trace", os.str());
        }
        Matrix h = 0.5 * (m + m.adjoint());
        if (check_psd) {
            const RealVector ev = hermitian_eigenvalues(h);
            if (ev[ev.size() - 1] < -tol::psd_clamp) {
                std::ostringstream os;
                os << "min eigenvalue " << ev[ev.size() - 1];
                throw invariant_error("psd", os.str());
            }
        }
        return h;
    }

    Matrix m_;
};

inline DensityOperator partial_trace(const DensityOperator& rho, std::span<const std::size_t> dims,
                                     std::span<const std::size_t> keep) {
    return DensityOperator::trusted(partial_trace(rho.matrix(), dims, keep));
}

inline DensityOperator kron(const DensityOperator& a, const DensityOperator& b) {
    return DensityOperator::trusted(kron(a.matrix(), b.matrix()));
}

// Orthogonal projector given by an orthonormal basis of its range.
class Projector {
public:
    explicit Projector(Matrix basis) : basis_(std::move(basis)) {
        if (basis_.rows() == 0) throw dimension_error("Projector: zero-dimensional ambient space");
        if (basis_.cols() > basis_.rows()) throw dimension_error("Projector: more basis vectors than dimensions");
        const Matrix gram = basis_.adjoint() * basis_;
        const double dev = max_abs(gram - Matrix::Identity(gram.rows(), gram.cols()));
        if (dev > tol::orthonormal) {
            throw invariant_error("orthonormal", "basis Gram matrix deviates from identity by " +
                                                     std::to_string(dev));
        }
    }

    static Projector full(std::size_t dim) {
        const auto d = static_cast<Index>(dim);
        return Projector(Matrix::Identity(d, d));
    }

    std::size_t dim() const { return static_cast<std::size_t>(basis_.rows()); }
    std::size_t rank() const { return static_cast<std::size_t>(basis_.cols()); }
    const Matrix& basis() const { return basis_; }
    Matrix matrix() const { return basis_ * basis_.adjoint(); }

    // tr(rho P)
    double expectation(const Matrix& rho) const {
        return (basis_.adjoint() * rho * basis_).trace().real();
    }

    double distance_to_range(const Vector& v) const {
        return (v - basis_ * (basis_.adjoint() * v)).norm();
    }

private:
    Matrix basis_;
};

}  // namespace qcomp

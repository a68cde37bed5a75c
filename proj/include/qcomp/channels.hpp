// channels.hpp - trace-preserving operations in Kraus form and the
// projective compression / embedding pair built on a high-probability subspace
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qcomp/linalg.hpp"
#include "qcomp/sources.hpp"
#include "qcomp/typicality.hpp"

namespace qcomp {

// A Kraus operator stored densely or factored as left * right^dagger with
// `left` out x r and `right` in x r. Compression maps carry one |0><e| term
// per complement vector and the round trip carries V V^dagger, so the
// factored form keeps them O(dim * r).
class KrausOperator {
public:
    explicit KrausOperator(Matrix m) : dense_(std::move(m)) {}

    static KrausOperator outer(const Vector& left, const Vector& right) {
        return factored(Matrix(left), Matrix(right));
    }

    static KrausOperator factored(Matrix left, Matrix right) {
        if (left.cols() != right.cols()) throw dimension_error("KrausOperator::factored: inner dimensions differ");
        KrausOperator k;
        k.left_ = std::move(left);
        k.right_ = std::move(right);
        k.factored_ = true;
        return k;
    }

    bool factored() const { return factored_; }
    bool rank_one() const { return factored_ && left_.cols() == 1; }
    Index rows() const { return factored_ ? left_.rows() : dense_.rows(); }
    Index cols() const { return factored_ ? right_.rows() : dense_.cols(); }
    const Matrix& left() const { return left_; }
    const Matrix& right() const { return right_; }

    Matrix dense() const { return factored_ ? Matrix(left_ * right_.adjoint()) : dense_; }

    Vector operator*(const Vector& x) const {
        return factored_ ? Vector(left_ * (right_.adjoint() * x)) : Vector(dense_ * x);
    }

    Matrix operator*(const Matrix& x) const {
        return factored_ ? Matrix(left_ * (right_.adjoint() * x)) : Matrix(dense_ * x);
    }

    // E rho E^dagger
    Matrix sandwich(const Matrix& rho) const {
        if (factored_) return left_ * (right_.adjoint() * rho * right_) * left_.adjoint();
        return dense_ * rho * dense_.adjoint();
    }

    // E^dagger E
    Matrix gram() const {
        if (factored_) return right_ * (left_.adjoint() * left_) * right_.adjoint();
        return dense_.adjoint() * dense_;
    }

    // tr(rho E), square operators only
    Complex trace_with(const Matrix& rho) const {
        if (factored_) return (right_.conjugate().cwiseProduct(rho * left_)).sum();
        return (rho.transpose().cwiseProduct(dense_)).sum();
    }

    double norm() const {
        if (!factored_) return dense_.norm();
        const Complex t = ((left_.adjoint() * left_).cwiseProduct((right_.adjoint() * right_).transpose())).sum();
        return std::sqrt(std::max(0.0, t.real()));
    }

    // this * first
    KrausOperator after(const KrausOperator& first) const {
        if (!factored_ && !first.factored_) {
            if (dense_.cols() < std::min(dense_.rows(), first.dense_.cols())) {
                return factored(dense_, first.dense_.adjoint());
            }
            return KrausOperator(Matrix(dense_ * first.dense_));
        }
        if (!factored_) return factored(dense_ * first.left_, first.right_);
        if (!first.factored_) return factored(left_, first.dense_.adjoint() * right_);
        const Matrix mid = right_.adjoint() * first.left_;
        if (left_.cols() <= first.left_.cols()) return factored(left_, first.right_ * mid.adjoint());
        return factored(left_ * mid, first.right_);
    }

private:
    KrausOperator() = default;

    Matrix dense_;
    Matrix left_;
    Matrix right_;
    bool factored_ = false;
};

// E(rho) = sum_i E_i rho E_i^dagger with sum_i E_i^dagger E_i = 1.
//
// Rank-one operators are batched: their right vectors form one matrix and
// their left vectors are stored once per distinct value.
class KrausChannel {
public:
    KrausChannel(std::size_t in_dim, std::size_t out_dim, std::vector<KrausOperator> ops,
                 double tolerance = 1e-10)
        : KrausChannel(in_dim, out_dim, std::move(ops), unchecked{}) {
        check_completeness(tolerance);
    }

    static KrausChannel identity(std::size_t dim) {
        const auto d = static_cast<Index>(dim);
        return KrausChannel(dim, dim, {KrausOperator(Matrix::Identity(d, d))});
    }

    static KrausChannel unitary(const Matrix& u) {
        const auto d = static_cast<std::size_t>(u.rows());
        return KrausChannel(d, static_cast<std::size_t>(u.cols()), {KrausOperator(u)});
    }

    std::size_t in_dim() const { return in_dim_; }
    std::size_t out_dim() const { return out_dim_; }
    std::size_t size() const { return ops_.size(); }
    const std::vector<KrausOperator>& ops() const { return ops_; }
    std::size_t pruned() const { return pruned_; }
    bool square() const { return in_dim_ == out_dim_; }

    // computed on first use for channels built by compose()
    double completeness_error() const {
        if (!completeness_error_) completeness_error_ = max_abs(gram_sum() - Matrix::Identity(in_dim_, in_dim_));
        return *completeness_error_;
    }

    Matrix gram_sum() const {
        Matrix g = Matrix::Zero(in_dim_, in_dim_);
        for (const auto* op : other_ops_) g += op->gram();
        if (right_.cols() > 0) {
            const RealVector lw = left_.colwise().squaredNorm().transpose();
            RealVector w(right_.cols());
            for (Index i = 0; i < right_.cols(); ++i) w[i] = lw[group_[static_cast<std::size_t>(i)]];
            g += right_ * w.cast<Complex>().asDiagonal() * right_.adjoint();
        }
        return g;
    }

    Matrix apply(const Matrix& rho) const {
        if (rho.rows() != static_cast<Index>(in_dim_)) throw dimension_error("apply: input dimension mismatch");
        Matrix out = Matrix::Zero(out_dim_, out_dim_);
        for (const auto* op : other_ops_) out += op->sandwich(rho);
        if (right_.cols() > 0) {
            const Matrix w = rho * right_;
            Vector s = Vector::Zero(left_.cols());
            for (Index i = 0; i < right_.cols(); ++i) s[group_[static_cast<std::size_t>(i)]] += right_.col(i).dot(w.col(i));
            out += left_ * s.asDiagonal() * left_.adjoint();
        }
        return out;
    }

    // tr(rho E_i) for every operator: non-batched ones first, then rank-one ones.
    std::vector<Complex> traces_with(const Matrix& rho) const {
        if (!square()) throw dimension_error("traces_with: channel is not square");
        std::vector<Complex> t;
        t.reserve(ops_.size());
        for (const auto* op : other_ops_) t.push_back(op->trace_with(rho));
        if (right_.cols() > 0) {
            const Matrix w = rho * left_;
            for (Index i = 0; i < right_.cols(); ++i) t.push_back(right_.col(i).dot(w.col(group_[static_cast<std::size_t>(i)])));
        }
        return t;
    }

    // <psi|E(|psi><psi|)|psi> = sum_i |<psi|E_i|psi>|^2 for each column psi.
    RealVector pure_overlaps(const Matrix& psis) const {
        if (!square()) throw dimension_error("pure_overlaps: channel is not square");
        RealVector f = RealVector::Zero(psis.cols());
        for (const auto* op : other_ops_) {
            const Matrix e_psi = *op * psis;
            for (Index c = 0; c < psis.cols(); ++c) f[c] += std::norm(psis.col(c).dot(e_psi.col(c)));
        }
        if (right_.cols() > 0) {
            const Matrix a = left_.adjoint() * psis;    // <u|psi> per distinct left vector
            const Matrix b = right_.adjoint() * psis;   // <v_i|psi>
            for (Index i = 0; i < right_.cols(); ++i) {
                const auto g = group_[static_cast<std::size_t>(i)];
                f += (a.row(g).conjugate().cwiseProduct(b.row(i))).cwiseAbs2().transpose();
            }
        }
        return f;
    }

private:
    friend KrausChannel compose(const KrausChannel& a, const KrausChannel& b);

    struct unchecked {};
    KrausChannel(std::size_t in_dim, std::size_t out_dim, std::vector<KrausOperator> ops, unchecked)
        : in_dim_(in_dim), out_dim_(out_dim) {
        if (in_dim == 0 || out_dim == 0) throw dimension_error("KrausChannel: zero dimension");
        for (auto& op : ops) {
            if (op.rows() != static_cast<Index>(out_dim) || op.cols() != static_cast<Index>(in_dim)) {
                std::ostringstream os;
                os << "KrausChannel: operator is " << op.rows() << "x" << op.cols() << ", expected "
                   << out_dim << "x" << in_dim;
                throw dimension_error(os.str());
            }
            if (op.norm() < 1e-14) {
                ++pruned_;
                continue;
            }
            ops_.push_back(std::move(op));
        }
        if (ops_.empty()) throw invariant_error("completeness", "no Kraus operators");
        build_batches();
    }

    void check_completeness(double tolerance) {
        if (completeness_error() > tolerance) {
            std::ostringstream os;
            os << "max |sum E^dagger E - 1| = " << *completeness_error_ << " exceeds " << tolerance;
            throw invariant_error("completeness", os.str());
        }
    }

    void build_batches() {
        other_ops_.clear();
        group_.clear();
        std::vector<const Matrix*> lefts;
        std::vector<const Matrix*> rights;
        for (const auto& op : ops_) {
            if (!op.rank_one()) {
                other_ops_.push_back(&op);
                continue;
            }
            std::size_t g = 0;
            while (g < lefts.size() && *lefts[g] != op.left()) ++g;
            if (g == lefts.size()) lefts.push_back(&op.left());
            group_.push_back(static_cast<Index>(g));
            rights.push_back(&op.right());
        }
        left_.resize(static_cast<Index>(out_dim_), static_cast<Index>(lefts.size()));
        right_.resize(static_cast<Index>(in_dim_), static_cast<Index>(rights.size()));
        for (std::size_t g = 0; g < lefts.size(); ++g) left_.col(static_cast<Index>(g)) = lefts[g]->col(0);
        for (std::size_t i = 0; i < rights.size(); ++i) right_.col(static_cast<Index>(i)) = rights[i]->col(0);
    }

    std::size_t in_dim_;
    std::size_t out_dim_;
    std::vector<KrausOperator> ops_;
    std::vector<const KrausOperator*> other_ops_;
    Matrix left_;
    Matrix right_;
    std::vector<Index> group_;
    std::size_t pruned_ = 0;
    mutable std::optional<double> completeness_error_;

public:
    KrausChannel(const KrausChannel& other)
        : in_dim_(other.in_dim_), out_dim_(other.out_dim_), ops_(other.ops_), pruned_(other.pruned_),
          completeness_error_(other.completeness_error_) {
        build_batches();
    }
    KrausChannel(KrausChannel&&) noexcept = default;
    KrausChannel& operator=(KrausChannel other) noexcept {
        std::swap(in_dim_, other.in_dim_);
        std::swap(out_dim_, other.out_dim_);
        std::swap(ops_, other.ops_);
        std::swap(other_ops_, other.other_ops_);
        std::swap(left_, other.left_);
        std::swap(right_, other.right_);
        std::swap(group_, other.group_);
        std::swap(pruned_, other.pruned_);
        std::swap(completeness_error_, other.completeness_error_);
        return *this;
    }
};

inline DensityOperator apply(const KrausChannel& ch, const DensityOperator& rho) {
    if (rho.dim() != ch.in_dim()) throw dimension_error("apply: state dimension does not match channel input");
    return DensityOperator::trusted(ch.apply(rho.matrix()), 1e-9);
}

// b after a. Near-zero products (norm < 1e-14) are dropped; see pruned().
// Completeness is inherited from a and b, so it is only measured on request.
inline KrausChannel compose(const KrausChannel& a, const KrausChannel& b) {
    if (a.out_dim() != b.in_dim()) throw dimension_error("compose: a.out_dim != b.in_dim");
    std::vector<KrausOperator> ops;
    ops.reserve(a.size() * b.size());
    for (const auto& bj : b.ops()) {
        for (const auto& ai : a.ops()) ops.push_back(bj.after(ai));
    }
    return KrausChannel(a.in_dim(), b.out_dim(), std::move(ops), KrausChannel::unchecked{});
}

namespace detail {

inline Matrix orthonormal_complement(const Matrix& basis) {
    const Index dim = basis.rows();
    const Index k = basis.cols();
    if (k == dim) return Matrix(dim, 0);
    Eigen::HouseholderQR<Matrix> qr(basis);
    const Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
    return q.rightCols(dim - k);
}

}  // namespace detail

// C(rho) = P rho P + sum_{e in S} |0><e| rho |e><0| in the coordinates of P's
// basis (output dimension rank P). `complement` must be an orthonormal basis
// of range(P)^perp; one is computed when omitted.
inline KrausChannel build_compression(const Projector& p, const Vector& zero_vec,
                                      std::optional<Matrix> complement = std::nullopt) {
    if (zero_vec.size() != static_cast<Index>(p.dim())) throw dimension_error("build_compression: zero_vec dimension");
    if (std::abs(zero_vec.norm() - 1.0) > tol::orthonormal) {
        throw invariant_error("unit-norm", "zero_vec is not a unit vector");
    }
    const double off = p.distance_to_range(zero_vec);
    if (off > tol::orthonormal) {
        throw invariant_error("zero-in-range", "zero_vec lies outside range(P) by " + std::to_string(off));
    }
    const Matrix& basis = p.basis();
    Matrix comp = complement ? std::move(*complement) : detail::orthonormal_complement(basis);
    if (comp.rows() != basis.rows() || comp.cols() != basis.rows() - basis.cols()) {
        throw dimension_error("build_compression: complement has the wrong shape");
    }
    if (comp.cols() > 0 && max_abs(basis.adjoint() * comp) > tol::orthonormal) {
        throw invariant_error("orthonormal", "complement is not orthogonal to range(P)");
    }
    const Vector zero_c = basis.adjoint() * zero_vec;
    std::vector<KrausOperator> ops;
    ops.reserve(static_cast<std::size_t>(comp.cols()) + 1);
    ops.emplace_back(Matrix(basis.adjoint()));
    for (Index i = 0; i < comp.cols(); ++i) ops.push_back(KrausOperator::outer(zero_c, comp.col(i)));
    return KrausChannel(p.dim(), p.rank(), std::move(ops));
}

// Canonical embedding of the compressed space back into the full space.
inline KrausChannel build_decompression(const Projector& p) {
    return KrausChannel(p.rank(), p.dim(), {KrausOperator(p.basis())});
}

enum class SchemeMode { epsilon, rate };

struct EpsilonLevel {
    double epsilon;
};

struct TargetRate {
    double rate;
};

struct CompressionScheme {
    std::size_t n = 0;
    SchemeMode mode = SchemeMode::epsilon;
    double level = 0.0;            // eps or R
    DensityOperator state;         // rho^(n)
    Spectrum spectrum;             // of rho^(n)
    Projector subspace;
    KrausChannel compressor;
    KrausChannel decompressor;
    double rate_log2dim = 0.0;     // log2 rank P
    double captured_mass = 0.0;    // tr(rho^(n) P)

    std::size_t rank() const { return subspace.rank(); }
    double rate() const { return rate_log2dim / static_cast<double>(n); }
    double qubit_rate() const { return std::max(0.0, std::ceil(rate_log2dim - 1e-12)) / static_cast<double>(n); }
    KrausChannel round_trip() const { return compose(compressor, decompressor); }
};

// Scheme on the top-k eigenvectors of a given block state.
inline CompressionScheme scheme_from_state(DensityOperator state, Spectrum spectrum, std::size_t n,
                                           std::size_t k, SchemeMode mode, double level) {
    const auto dim = static_cast<Index>(state.dim());
    if (k == 0 || static_cast<Index>(k) > dim) throw std::invalid_argument("scheme: empty or oversized subspace");
    const auto ki = static_cast<Index>(k);
    Projector p(spectrum.vectors.leftCols(ki));
    const Vector zero = spectrum.vectors.col(0);
    KrausChannel c = build_compression(p, zero, Matrix(spectrum.vectors.rightCols(dim - ki)));
    KrausChannel d = build_decompression(p);
    const double mass = spectrum.values.head(ki).sum();
    return CompressionScheme{n,
                             mode,
                             level,
                             std::move(state),
                             std::move(spectrum),
                             std::move(p),
                             std::move(c),
                             std::move(d),
                             std::log2(static_cast<double>(k)),
                             mass};
}

inline CompressionScheme make_scheme(const SourceModel& src, std::size_t n, EpsilonLevel level,
                                     const SourceLimits& limits = {}) {
    DensityOperator rho = block_state(src, n, limits);
    Spectrum s = rho.spectrum();
    const HighProbSubspace h = beta(s, level.epsilon);
    const auto k = static_cast<std::size_t>(std::llround(h.count));
    return scheme_from_state(std::move(rho), std::move(s), n, k, SchemeMode::epsilon, level.epsilon);
}

inline CompressionScheme make_scheme(const SourceModel& src, std::size_t n, TargetRate target,
                                     const SourceLimits& limits = {}) {
    DensityOperator rho = block_state(src, n, limits);
    const double log2_dim = std::log2(static_cast<double>(rho.dim()));
    const double k = static_cast<double>(n) * target.rate < 0.0
                         ? 0.0
                         : rate_dimension(n, target.rate, log2_dim);
    if (k < 1.0) throw std::invalid_argument("make_scheme: 2^{nR} < 1 gives an empty subspace");
    Spectrum s = rho.spectrum();
    return scheme_from_state(std::move(rho), std::move(s), n, static_cast<std::size_t>(k), SchemeMode::rate,
                             target.rate);
}

}  // namespace qcomp

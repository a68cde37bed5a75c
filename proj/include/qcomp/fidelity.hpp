// fidelity.hpp - fidelity, trace distance, entanglement and ensemble fidelity
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qcomp/channels.hpp"
#include "qcomp/linalg.hpp"
#include "qcomp/typicality.hpp"

namespace qcomp {

namespace detail {

inline double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

inline double sqrt_floor(double x) { return x <= tol::numerical_zero ? 0.0 : std::sqrt(x); }

}  // namespace detail

// F(rho, sigma) = tr sqrt( sqrt(rho) sigma sqrt(rho) )
inline double fidelity(const Spectrum& rho_spectrum, const DensityOperator& sigma) {
    if (rho_spectrum.size() != sigma.dim()) throw dimension_error("fidelity: dimension mismatch");
    // sqrt(rho) sigma sqrt(rho) = U (D U^dagger sigma U D) U^dagger, restricted to the support of rho
    std::vector<Index> support;
    for (Index i = 0; i < rho_spectrum.values.size(); ++i) {
        if (detail::sqrt_floor(rho_spectrum.values[i]) > 0.0) support.push_back(i);
    }
    if (support.empty()) return 0.0;
    const auto r = static_cast<Index>(support.size());
    Matrix u(rho_spectrum.vectors.rows(), r);
    RealVector root(r);
    for (Index j = 0; j < r; ++j) {
        u.col(j) = rho_spectrum.vectors.col(support[static_cast<std::size_t>(j)]);
        root[j] = std::sqrt(rho_spectrum.values[support[static_cast<std::size_t>(j)]]);
    }
    Matrix m = u.adjoint() * (sigma.matrix() * u);
    m = root.cast<Complex>().asDiagonal() * m * root.cast<Complex>().asDiagonal();
    const RealVector ev = hermitian_eigenvalues(0.5 * (m + m.adjoint()));
    double f = 0.0;
    for (Index i = 0; i < ev.size(); ++i) f += detail::sqrt_floor(ev[i]);
    return detail::clamp_unit(f);
}

inline double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
    if (rho.dim() != sigma.dim()) throw dimension_error("fidelity: dimension mismatch");
    return fidelity(rho.spectrum(), sigma);
}

// Same quantity as || sqrt(rho) sqrt(sigma) ||_1, via singular values.
inline double fidelity_nuclear(const DensityOperator& rho, const DensityOperator& sigma) {
    if (rho.dim() != sigma.dim()) throw dimension_error("fidelity_nuclear: dimension mismatch");
    const Matrix a = spectral_function(rho.spectrum(), detail::sqrt_floor);
    const Matrix b = spectral_function(sigma.spectrum(), detail::sqrt_floor);
    Eigen::BDCSVD<Matrix> svd(a * b);
    return detail::clamp_unit(svd.singularValues().sum());
}

// F(|psi><psi|, sigma) = sqrt(<psi|sigma|psi>)
inline double fidelity_pure(const Vector& psi, const DensityOperator& sigma) {
    if (static_cast<std::size_t>(psi.size()) != sigma.dim()) throw dimension_error("fidelity_pure: dimension mismatch");
    return detail::clamp_unit(std::sqrt(std::max(0.0, psi.dot(sigma.matrix() * psi).real())));
}

inline double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
    if (rho.dim() != sigma.dim()) throw dimension_error("trace_distance: dimension mismatch");
    return 0.5 * trace_norm(rho.matrix() - sigma.matrix());
}

// F_e(rho, E) = sum_i |tr(rho E_i)|^2
inline double entanglement_fidelity_kraus(const DensityOperator& rho, const KrausChannel& ch) {
    if (!ch.square()) throw dimension_error("entanglement fidelity needs a channel from a space to itself");
    if (rho.dim() != ch.in_dim()) throw dimension_error("entanglement_fidelity_kraus: dimension mismatch");
    double f = 0.0;
    for (const Complex& t : ch.traces_with(rho.matrix())) f += std::norm(t);
    return detail::clamp_unit(f);
}

// <Psi| (id x E)(|Psi><Psi|) |Psi> for the purification
// |Psi> = sum_i sqrt(l_i) R|i> x |v_i>, R an optional reference unitary.
// The joint state is formed densely, so dim^2 must fit under dense_cap.
inline double entanglement_fidelity_purification(const DensityOperator& rho, const KrausChannel& ch,
                                                 std::size_t dense_cap = 4096,
                                                 const std::optional<Matrix>& reference = std::nullopt) {
    if (!ch.square()) throw dimension_error("entanglement fidelity needs a channel from a space to itself");
    if (rho.dim() != ch.in_dim()) throw dimension_error("entanglement_fidelity_purification: dimension mismatch");
    const auto d = static_cast<Index>(rho.dim());
    if (static_cast<std::size_t>(d * d) > dense_cap) {
        throw capacity_error("purification of dimension " + std::to_string(d * d) + " exceeds dense cap",
                             static_cast<double>(dense_cap));
    }
    const Spectrum s = rho.spectrum();
    Matrix r = Matrix::Identity(d, d);
    if (reference) {
        if (reference->rows() != d || !is_unitary(*reference)) {
            throw invariant_error("unitary", "reference is not a unitary of the state dimension");
        }
        r = *reference;
    }
    Vector psi = Vector::Zero(d * d);
    for (Index i = 0; i < d; ++i) {
        if (s.values[i] <= 0.0) continue;
        psi += std::sqrt(s.values[i]) * kron(Vector(r.col(i)), Vector(s.vectors.col(i)));
    }
    Matrix joint = Matrix::Zero(d * d, d * d);
    const Matrix id = Matrix::Identity(d, d);
    for (const auto& op : ch.ops()) {
        const Vector phi = kron(id, op.dense()) * psi;
        joint += phi * phi.adjoint();
    }
    return detail::clamp_unit(psi.dot(joint * psi).real());
}

// {p_i, rho_i}; pure members are stored as state vectors.
class Ensemble {
public:
    struct Item {
        double weight;
        std::variant<Vector, DensityOperator> state;
    };

    explicit Ensemble(std::vector<Item> items, double tolerance = tol::unit_trace) : items_(std::move(items)) {
        if (items_.empty()) throw std::invalid_argument("Ensemble: no members");
        double total = 0.0;
        for (const auto& it : items_) {
            if (!(it.weight >= 0.0 && it.weight <= 1.0 + tolerance)) {
                throw invariant_error("probability", "weight " + std::to_string(it.weight) + " outside [0,1]");
            }
            total += it.weight;
            const std::size_t d = item_dim(it);
            if (d != item_dim(items_.front())) throw dimension_error("Ensemble: members differ in dimension");
            if (const auto* v = std::get_if<Vector>(&it.state)) {
                if (std::abs(v->squaredNorm() - 1.0) > 1e-9) {
                    throw invariant_error("pure", "member vector is not normalised");
                }
            }
        }
        if (std::abs(total - 1.0) > tolerance) {
            throw invariant_error("probability", "weights sum to " + std::to_string(total));
        }
        DensityOperator::trusted(average(), 1e-9);
    }

    // Eigen-decomposition of rho: weights are eigenvalues, members eigenvectors.
    static Ensemble eigen(const Spectrum& s) {
        std::vector<Item> items;
        for (Index i = 0; i < s.values.size(); ++i) {
            if (s.values[i] <= 0.0) continue;
            items.push_back({s.values[i], Vector(s.vectors.col(i))});
        }
        return Ensemble(std::move(items), tag{});
    }

    static Ensemble eigen(const DensityOperator& rho) { return eigen(rho.spectrum()); }

    const std::vector<Item>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    std::size_t dim() const { return item_dim(items_.front()); }

    bool pure(std::size_t i) const {
        const auto& st = items_.at(i).state;
        if (std::holds_alternative<Vector>(st)) return true;
        return std::abs(std::get<DensityOperator>(st).purity() - 1.0) <= 1e-9;
    }

    Matrix average() const {
        const auto d = static_cast<Index>(dim());
        Matrix m = Matrix::Zero(d, d);
        for (const auto& it : items_) {
            if (const auto* v = std::get_if<Vector>(&it.state)) {
                m += it.weight * (*v) * v->adjoint();
            } else {
                m += it.weight * std::get<DensityOperator>(it.state).matrix();
            }
        }
        return m;
    }

private:
    struct tag {};
    Ensemble(std::vector<Item> items, tag) : items_(std::move(items)) {
        if (items_.empty()) throw std::invalid_argument("Ensemble: no members");
    }

    static std::size_t item_dim(const Item& it) {
        if (const auto* v = std::get_if<Vector>(&it.state)) return static_cast<std::size_t>(v->size());
        return std::get<DensityOperator>(it.state).dim();
    }

    std::vector<Item> items_;
};

// Fbar = sum_i p_i F(rho_i, E(rho_i))^2
inline double ensemble_fidelity(const Ensemble& ens, const KrausChannel& ch) {
    if (!ch.square()) throw dimension_error("ensemble fidelity needs a channel from a space to itself");
    if (ens.dim() != ch.in_dim()) throw dimension_error("ensemble_fidelity: dimension mismatch");
    std::vector<std::size_t> pure_idx;
    double f = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const auto& it = ens.items()[i];
        if (std::holds_alternative<Vector>(it.state)) {
            pure_idx.push_back(i);
            continue;
        }
        const auto& rho = std::get<DensityOperator>(it.state);
        const double fi = fidelity(rho, apply(ch, rho));
        f += it.weight * fi * fi;
    }
    if (!pure_idx.empty()) {
        const auto d = static_cast<Index>(ens.dim());
        // columns in batches to bound memory
        const std::size_t batch = 256;
        for (std::size_t start = 0; start < pure_idx.size(); start += batch) {
            const std::size_t len = std::min(batch, pure_idx.size() - start);
            Matrix psis(d, static_cast<Index>(len));
            for (std::size_t j = 0; j < len; ++j) {
                psis.col(static_cast<Index>(j)) = std::get<Vector>(ens.items()[pure_idx[start + j]].state);
            }
            const RealVector overlaps = ch.pure_overlaps(psis);
            for (std::size_t j = 0; j < len; ++j) {
                f += ens.items()[pure_idx[start + j]].weight * overlaps[static_cast<Index>(j)];
            }
        }
    }
    return detail::clamp_unit(f);
}

// Lower and upper estimates of the round-trip fidelity for a compressed
// dimension d: Fbar over the eigen-ensemble, and min(6 eta_d, F(rho, E(rho))).
struct FsBounds {
    double lower = 0.0;
    double upper = 0.0;
    double six_eta = 0.0;
    double fidelity_part = 0.0;
};

inline FsBounds fs_bounds(const DensityOperator& rho, const Spectrum& spectrum, const KrausChannel& ch,
                                std::size_t d) {
    FsBounds b;
    b.lower = ensemble_fidelity(Ensemble::eigen(spectrum), ch);
    b.fidelity_part = fidelity(spectrum, apply(ch, rho));
    b.six_eta = 6.0 * eta(spectrum, d);
    b.upper = std::min(b.six_eta, b.fidelity_part);
    return b;
}

inline FsBounds fs_bounds(const DensityOperator& rho, const KrausChannel& ch, std::size_t d) {
    return fs_bounds(rho, rho.spectrum(), ch, d);
}

// Named slacks; each inequality holds when its slack is >= -tolerance.
struct InequalityReport {
    std::map<std::string, double> slack;
    double tolerance = 1e-9;

    bool passed() const {
        return std::all_of(slack.begin(), slack.end(), [&](const auto& kv) { return kv.second >= -tolerance; });
    }

    std::vector<std::string> failures() const {
        std::vector<std::string> out;
        for (const auto& [name, v] : slack) {
            if (v < -tolerance) out.push_back(name);
        }
        return out;
    }
};

// Checks, for states rho and sigma, an ensemble averaging to rho and a
// channel E on rho's space:
//   1 - F <= T <= sqrt(1 - F^2)
//   0 <= F_e <= Fbar <= F(rho, E(rho)) <= 1
//   |S(rho) - S(E(rho))| / n <= 2 log2(d) sqrt(1 - F(rho,E(rho))^2) + 1/n
// with d the site dimension and n the number of sites.
inline InequalityReport check_inequalities(const DensityOperator& rho, const DensityOperator& sigma,
                                           const Ensemble& ens, const KrausChannel& ch, std::size_t sites = 1,
                                           std::size_t site_dim = 0) {
    if (ens.dim() != rho.dim()) throw dimension_error("check_inequalities: ensemble dimension");
    if (max_abs(ens.average() - rho.matrix()) > 1e-9) {
        throw std::invalid_argument("check_inequalities: ensemble does not average to rho");
    }
    if (sites == 0) throw std::invalid_argument("check_inequalities: sites must be positive");
    if (site_dim == 0) site_dim = rho.dim();

    InequalityReport r;
    const double f = fidelity(rho, sigma);
    const double t = trace_distance(rho, sigma);
    r.slack["estimate.lower"] = t - (1.0 - f);
    r.slack["estimate.upper"] = std::sqrt(std::max(0.0, 1.0 - f * f)) - t;

    const DensityOperator out = apply(ch, rho);
    const double fe = entanglement_fidelity_kraus(rho, ch);
    const double fbar = ensemble_fidelity(ens, ch);
    const double fo = fidelity(rho, out);
    r.slack["relation.fe_nonneg"] = fe;
    r.slack["relation.fe_le_fbar"] = fbar - fe;
    r.slack["relation.fbar_le_f"] = fo - fbar;
    r.slack["relation.f_le_one"] = 1.0 - fo;

    const double n = static_cast<double>(sites);
    const double ds = std::abs(von_neumann_entropy(rho) - von_neumann_entropy(out));
    r.slack["fannes"] = 2.0 * std::log2(static_cast<double>(site_dim)) * std::sqrt(std::max(0.0, 1.0 - fo * fo)) +
                        1.0 / n - ds / n;
    return r;
}

}  // namespace qcomp

// sources.hpp - stationary ergodic sources and the spectra of their block states
//
// Two families are provided:
//   * IID: rho^(n) = rho_1^{(x)n}
//   * RotatedMarkov: a classical stationary Markov chain over d letters whose
//     word distribution is diagonal in the basis U^{(x)n}|i_1 ... i_n>.
//
// block_state() builds dense d^n x d^n matrices. class_spectrum() returns the
// spectrum of rho^(n) as (eigenvalue, multiplicity) classes without forming any
// matrix, in log2 form so that n in the thousands does not underflow.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qcomp/linalg.hpp"

namespace qcomp {

struct SourceLimits {
    std::size_t dense_cap = 4096;    // max d^n for dense matrices
    double word_log2_cap = 24.0;     // max n*log2(d) for Markov word enumeration
    std::size_t max_classes = 20'000'000;
};

struct IidSource {
    DensityOperator site_state;
};

struct RotatedMarkovSource {
    RealMatrix transition;   // row-stochastic
    RealVector initial;      // stationary distribution unless built with an explicit one
    Matrix rotation;         // single-site unitary U
};

namespace detail {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double safe_log2(double x) { return x > 0.0 ? std::log2(x) : neg_inf; }

// -p log2 p with 0 log 0 = 0
inline double entropy_term(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

inline double log2_factorial(double n) { return std::lgamma(n + 1.0) / std::log(2.0); }

// d^n, or nullopt if it exceeds `cap`.
inline std::optional<std::size_t> bounded_power(std::size_t d, std::size_t n, std::size_t cap) {
    std::size_t p = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (p > cap / d) return std::nullopt;
        p *= d;
    }
    return p <= cap ? std::optional<std::size_t>(p) : std::nullopt;
}

inline bool all_positive(const RealMatrix& m) { return (m.array() > 0.0).all(); }

}  // namespace detail

// Some power M^k with k <= d^2 is entrywise positive (irreducible + aperiodic).
inline bool is_primitive(const RealMatrix& m) {
    const Index d = m.rows();
    RealMatrix pattern = (m.array() > 0.0).cast<double>().matrix();
    RealMatrix power = pattern;
    for (Index k = 1; k <= d * d; ++k) {
        if (detail::all_positive(power)) return true;
        power = ((power * pattern).array() > 0.0).cast<double>().matrix();
    }
    return false;
}

// Solves pi M = pi, sum pi = 1.
inline RealVector stationary_distribution(const RealMatrix& m) {
    const Index d = m.rows();
    RealMatrix a = m.transpose() - RealMatrix::Identity(d, d);
    a.row(d - 1).setOnes();
    RealVector b = RealVector::Zero(d);
    b[d - 1] = 1.0;
    RealVector pi = a.fullPivLu().solve(b);
    for (Index i = 0; i < d; ++i) pi[i] = std::max(pi[i], 0.0);
    return pi / pi.sum();
}

class SourceModel {
public:
    static SourceModel iid(DensityOperator site_state) {
        return SourceModel(IidSource{std::move(site_state)});
    }

    // Markov chain started in its stationary distribution.
    static SourceModel rotated_markov(RealMatrix transition, Matrix rotation) {
        check_chain(transition, rotation);
        RealVector pi = stationary_distribution(transition);
        const double residual = (pi.transpose() * transition - pi.transpose()).cwiseAbs().maxCoeff();
        if (residual > 1e-10) {
            throw invariant_error("stationary", "pi M - pi residual " + std::to_string(residual));
        }
        return SourceModel(RotatedMarkovSource{std::move(transition), std::move(pi), std::move(rotation)});
    }

    // Explicit initial distribution. Stationarity is not enforced, which makes
    // non-stationary counterexamples expressible; check_consistency exposes them.
    static SourceModel rotated_markov(RealMatrix transition, RealVector initial, Matrix rotation) {
        check_chain(transition, rotation);
        if (initial.size() != transition.rows()) {
            throw dimension_error("initial distribution length does not match transition matrix");
        }
        if ((initial.array() < 0.0).any() || std::abs(initial.sum() - 1.0) > 1e-12) {
            throw invariant_error("distribution", "initial distribution must be non-negative and sum to 1");
        }
        return SourceModel(RotatedMarkovSource{std::move(transition), std::move(initial), std::move(rotation)});
    }

    std::size_t site_dim() const {
        if (const auto* s = as_iid()) return s->site_state.dim();
        return static_cast<std::size_t>(as_markov()->transition.rows());
    }

    const IidSource* as_iid() const { return std::get_if<IidSource>(&model_); }
    const RotatedMarkovSource* as_markov() const { return std::get_if<RotatedMarkovSource>(&model_); }

    // max |pi M - pi|; zero for IID sources.
    double stationarity_residual() const {
        const auto* m = as_markov();
        if (!m) return 0.0;
        return (m->initial.transpose() * m->transition - m->initial.transpose()).cwiseAbs().maxCoeff();
    }

    std::string describe() const {
        std::ostringstream os;
        if (const auto* s = as_iid()) {
            os << "iid(d=" << s->site_state.dim() << ", eigenvalues=";
            const RealVector ev = s->site_state.eigenvalues();
            for (Index i = 0; i < ev.size(); ++i) os << (i ? " " : "") << ev[i];
            os << ")";
        } else {
            const auto* m = as_markov();
            os << "rotated_markov(d=" << m->transition.rows() << ", pi=";
            for (Index i = 0; i < m->initial.size(); ++i) os << (i ? " " : "") << m->initial[i];
            os << ")";
        }
        return os.str();
    }

private:
    explicit SourceModel(IidSource s) : model_(std::move(s)) {}
    explicit SourceModel(RotatedMarkovSource s) : model_(std::move(s)) {}

    static void check_chain(const RealMatrix& m, const Matrix& u) {
        if (m.rows() == 0 || m.rows() != m.cols()) throw dimension_error("transition matrix must be square");
        if (u.rows() != m.rows() || u.cols() != m.cols()) {
            throw dimension_error("rotation dimension does not match transition matrix");
        }
        if (!m.allFinite() || (m.array() < 0.0).any()) {
            throw invariant_error("row-stochastic", "transition matrix has negative or non-finite entries");
        }
        for (Index i = 0; i < m.rows(); ++i) {
            const double row = m.row(i).sum();
            if (std::abs(row - 1.0) > 1e-12) {
                std::ostringstream os;
                os << "row " << i << " sums to " << row;
                throw invariant_error("row-stochastic", os.str());
            }
        }
        if (!is_primitive(m)) {
            throw invariant_error("primitive", "transition matrix is not irreducible and aperiodic");
        }
        if (!is_unitary(u)) throw invariant_error("unitary", "rotation is not unitary within 1e-10");
    }

    std::variant<IidSource, RotatedMarkovSource> model_;
};

// --------------------------------------------------------------------------
// Class spectra

enum class LabelKind {
    eigen_index,        // label = {index into a dense Spectrum}
    iid_type,           // label = occupation counts over distinct site eigenvalues
    word,               // label = the word i_1 ... i_n
    transition_counts,  // label = {i_1, N_00, N_01, ..., N_(d-1)(d-1)}
};

struct SpectralClass {
    double log2_value = 0.0;         // -inf encodes a zero eigenvalue
    double multiplicity = 1.0;       // exact while below 2^53
    double log2_multiplicity = 0.0;
    std::uint64_t key = 0;           // rank of the label in lexicographic order

    double value() const { return std::exp2(log2_value); }
    double mass() const { return std::exp2(log2_value + log2_multiplicity); }
};

struct ClassSpectrum {
    std::vector<SpectralClass> classes;   // non-increasing value, ties by key
    std::size_t site_dim = 0;
    std::size_t sites = 0;
    double log2_total_dim = 0.0;
    LabelKind label_kind = LabelKind::eigen_index;
    std::size_t label_width = 0;
    std::vector<std::uint32_t> label_table;   // aggregated kinds, indexed by key

    std::size_t size() const { return classes.size(); }

    void sort() {
        std::sort(classes.begin(), classes.end(), [](const SpectralClass& a, const SpectralClass& b) {
            if (a.log2_value != b.log2_value) return a.log2_value > b.log2_value;
            return a.key < b.key;
        });
    }

    std::vector<std::uint32_t> label(std::size_t i) const {
        const std::uint64_t key = classes.at(i).key;
        switch (label_kind) {
            case LabelKind::eigen_index:
                return {static_cast<std::uint32_t>(key)};
            case LabelKind::word: {
                std::vector<std::uint32_t> w(sites);
                std::uint64_t k = key;
                for (std::size_t p = sites; p-- > 0;) {
                    w[p] = static_cast<std::uint32_t>(k % site_dim);
                    k /= site_dim;
                }
                return w;
            }
            default: {
                const auto first = label_table.begin() + static_cast<std::ptrdiff_t>(key * label_width);
                return {first, first + static_cast<std::ptrdiff_t>(label_width)};
            }
        }
    }

    double total_mass() const {
        double m = 0.0;
        for (const auto& c : classes) m += c.mass();
        return m;
    }

    double total_multiplicity() const {
        double m = 0.0;
        for (const auto& c : classes) m += c.multiplicity;
        return m;
    }

    // Eigenvalues repeated by multiplicity, non-increasing.
    std::vector<double> expanded_values(std::size_t max_count = 1u << 24) const {
        if (total_multiplicity() > static_cast<double>(max_count)) {
            throw capacity_error("expanded_values: too many eigenvalues", static_cast<double>(max_count));
        }
        std::vector<double> out;
        for (const auto& c : classes) {
            out.insert(out.end(), static_cast<std::size_t>(std::llround(c.multiplicity)), c.value());
        }
        return out;
    }
};

// A dense Spectrum viewed as one class per eigenvector.
inline ClassSpectrum to_classes(const Spectrum& s) {
    ClassSpectrum cs;
    cs.site_dim = s.size();
    cs.sites = 1;
    cs.log2_total_dim = std::log2(static_cast<double>(s.size()));
    cs.label_kind = LabelKind::eigen_index;
    cs.classes.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double v = s.values[static_cast<Index>(i)];
        cs.classes.push_back({detail::safe_log2(std::max(v, 0.0)), 1.0, 0.0, i});
    }
    cs.sort();
    return cs;
}

namespace detail {

// n! / prod c_k!, exactly, or nullopt on overflow of 53-bit integers.
inline std::optional<double> exact_multinomial(const std::vector<std::uint32_t>& counts) {
    unsigned __int128 result = 1;
    std::uint64_t total = 0;
    for (std::uint32_t c : counts) {
        for (std::uint32_t i = 1; i <= c; ++i) {
            ++total;
            result = result * total / i;   // binomial prefix products stay integral
            if (result > (static_cast<unsigned __int128>(1) << 53)) return std::nullopt;
        }
    }
    return static_cast<double>(result);
}

inline double log2_multinomial(const std::vector<std::uint32_t>& counts) {
    double n = 0.0;
    double acc = 0.0;
    for (std::uint32_t c : counts) {
        n += c;
        acc -= log2_factorial(c);
    }
    return acc + log2_factorial(n);
}

inline double multiplicity_from_log2(double log2_mult) {
    // lgamma-based logs are accurate to ~1e-15 relative; round while that is sub-unit
    const double m = std::exp2(log2_mult);
    return log2_mult < 40.0 ? std::round(m) : m;
}

inline void require_class_budget(double count, const SourceLimits& limits, const char* what) {
    if (count > static_cast<double>(limits.max_classes)) {
        std::ostringstream os;
        os << what << ": " << count << " classes exceed max_classes " << limits.max_classes;
        throw capacity_error(os.str(), static_cast<double>(limits.max_classes));
    }
}

inline double binomial_double(double n, double k) {
    return std::round(std::exp2(log2_factorial(n) - log2_factorial(k) - log2_factorial(n - k)));
}

inline ClassSpectrum iid_classes(const IidSource& src, std::size_t n, const SourceLimits& limits) {
    const RealVector ev = src.site_state.eigenvalues();
    // distinct site eigenvalues with their degeneracy, largest first
    std::vector<double> value;
    std::vector<double> degeneracy;
    for (Index i = 0; i < ev.size(); ++i) {
        if (!value.empty() && std::abs(value.back() - ev[i]) <= 1e-12) {
            degeneracy.back() += 1.0;
        } else {
            value.push_back(ev[i]);
            degeneracy.push_back(1.0);
        }
    }
    const std::size_t groups = value.size();
    require_class_budget(binomial_double(static_cast<double>(n + groups - 1), static_cast<double>(groups - 1)),
                         limits, "iid type classes");

    ClassSpectrum cs;
    cs.site_dim = src.site_state.dim();
    cs.sites = n;
    cs.log2_total_dim = static_cast<double>(n) * std::log2(static_cast<double>(cs.site_dim));
    cs.label_kind = LabelKind::iid_type;
    cs.label_width = groups;

    std::vector<double> log2_value(groups);
    std::vector<double> log2_deg(groups);
    for (std::size_t k = 0; k < groups; ++k) {
        log2_value[k] = safe_log2(value[k]);
        log2_deg[k] = std::log2(degeneracy[k]);
    }

    // Compositions of n into `groups` parts in lexicographic order.
    std::vector<std::uint32_t> counts(groups, 0);
    std::uint64_t key = 0;
    auto emit = [&] {
        SpectralClass c;
        c.key = key++;
        double lv = 0.0;
        double ldeg = 0.0;
        for (std::size_t k = 0; k < groups; ++k) {
            if (counts[k] == 0) continue;
            lv += log2_value[k] == neg_inf ? neg_inf : counts[k] * log2_value[k];
            ldeg += counts[k] * log2_deg[k];
        }
        c.log2_value = lv;
        c.log2_multiplicity = log2_multinomial(counts) + ldeg;
        const auto exact = exact_multinomial(counts);
        double exact_deg = 1.0;
        for (std::size_t k = 0; k < groups; ++k) exact_deg *= std::pow(degeneracy[k], counts[k]);
        if (exact && *exact * exact_deg < 9.0e15) {
            c.multiplicity = *exact * exact_deg;
        } else {
            c.multiplicity = std::exp2(c.log2_multiplicity);
        }
        cs.classes.push_back(c);
        cs.label_table.insert(cs.label_table.end(), counts.begin(), counts.end());
    };
    auto rec = [&](auto& self, std::size_t pos, std::uint32_t left) -> void {
        if (pos + 1 == groups) {
            counts[pos] = left;
            emit();
            return;
        }
        for (std::uint32_t c = 0; c <= left; ++c) {
            counts[pos] = c;
            self(self, pos + 1, left - c);
        }
    };
    rec(rec, 0, static_cast<std::uint32_t>(n));
    cs.sort();
    return cs;
}

inline RealMatrix log2_matrix(const RealMatrix& m) {
    return m.unaryExpr([](double x) { return safe_log2(x); });
}

inline ClassSpectrum markov_word_classes(const RotatedMarkovSource& src, std::size_t n,
                                         const SourceLimits& limits) {
    const auto d = static_cast<std::size_t>(src.transition.rows());
    const double log2_words = static_cast<double>(n) * std::log2(static_cast<double>(d));
    if (log2_words > limits.word_log2_cap + 1e-9) {
        std::ostringstream os;
        os << "markov word enumeration: n*log2(d) = " << log2_words << " exceeds word cap "
           << limits.word_log2_cap;
        throw capacity_error(os.str(), limits.word_log2_cap);
    }
    require_class_budget(std::exp2(log2_words), limits, "markov words");

    ClassSpectrum cs;
    cs.site_dim = d;
    cs.sites = n;
    cs.log2_total_dim = log2_words;
    cs.label_kind = LabelKind::word;
    cs.classes.reserve(static_cast<std::size_t>(std::llround(std::exp2(log2_words))));

    const RealMatrix lm = log2_matrix(src.transition);
    auto rec = [&](auto& self, std::size_t depth, std::size_t last, double lp, std::uint64_t key) -> void {
        if (depth == n) {
            cs.classes.push_back({lp, 1.0, 0.0, key});
            return;
        }
        for (std::size_t j = 0; j < d; ++j) {
            self(self, depth + 1, j, lp + lm(static_cast<Index>(last), static_cast<Index>(j)), key * d + j);
        }
    };
    for (std::size_t u = 0; u < d; ++u) rec(rec, 1, u, safe_log2(src.initial[static_cast<Index>(u)]), u);
    cs.sort();
    return cs;
}

// log2 of the number of words with first letter u and transition counts N:
// Eulerian trails u -> v in the multigraph N (BEST theorem with the matrix-tree
// count of arborescences into v), divided by the orderings of parallel edges.
inline std::optional<double> log2_trail_count(const std::vector<std::uint32_t>& counts, std::size_t d,
                                              std::size_t u, std::size_t v) {
    std::vector<double> out(d, 0.0);
    std::vector<double> in(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out[i] += counts[i * d + j];
            in[j] += counts[i * d + j];
        }
    }
    std::vector<std::size_t> others;
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const bool active = out[i] > 0 || in[i] > 0 || i == u || i == v;
        if (!active) continue;
        acc += log2_factorial(out[i] - 1.0 + (i == v ? 1.0 : 0.0));
        for (std::size_t j = 0; j < d; ++j) acc -= log2_factorial(counts[i * d + j]);
        if (i != v) others.push_back(i);
    }
    double trees = 1.0;
    if (!others.empty()) {
        const auto m = static_cast<Index>(others.size());
        RealMatrix lap(m, m);
        for (Index a = 0; a < m; ++a) {
            for (Index b = 0; b < m; ++b) {
                const std::size_t i = others[static_cast<std::size_t>(a)];
                const std::size_t j = others[static_cast<std::size_t>(b)];
                lap(a, b) = (a == b ? out[i] : 0.0) - counts[i * d + j];
            }
        }
        trees = std::round(lap.partialPivLu().determinant());
    }
    if (trees < 0.5) return std::nullopt;
    return acc + std::log2(trees);
}

inline ClassSpectrum markov_count_classes(const RotatedMarkovSource& src, std::size_t n,
                                          const SourceLimits& limits) {
    const auto d = static_cast<std::size_t>(src.transition.rows());
    const std::uint32_t steps = static_cast<std::uint32_t>(n - 1);
    // Off-diagonal candidates visited before the balance filter.
    const double off_entries = static_cast<double>(d * d - d);
    require_class_budget(binomial_double(static_cast<double>(steps) + off_entries, off_entries), limits,
                         "markov transition-count candidates");

    const RealMatrix lm = log2_matrix(src.transition);
    const std::size_t width = 1 + d * d;
    std::vector<SpectralClass> classes;
    std::vector<std::uint32_t> labels;

    std::vector<std::uint32_t> counts(d * d, 0);
    std::vector<std::size_t> off_idx;
    std::vector<std::size_t> diag_idx;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) (i == j ? diag_idx : off_idx).push_back(i * d + j);
    }

    auto emit = [&](std::size_t u, std::size_t v) {
        const auto log2_mult = log2_trail_count(counts, d, u, v);
        if (!log2_mult) return;
        double lv = safe_log2(src.initial[static_cast<Index>(u)]);
        for (std::size_t k = 0; k < d * d; ++k) {
            if (counts[k] == 0) continue;
            const double l = lm(static_cast<Index>(k / d), static_cast<Index>(k % d));
            lv = (l == neg_inf || lv == neg_inf) ? neg_inf : lv + counts[k] * l;
        }
        SpectralClass c;
        c.log2_value = lv;
        c.log2_multiplicity = *log2_mult;
        c.multiplicity = multiplicity_from_log2(*log2_mult);
        c.key = classes.size();
        classes.push_back(c);
        labels.push_back(static_cast<std::uint32_t>(u));
        labels.insert(labels.end(), counts.begin(), counts.end());
        if (classes.size() > limits.max_classes) {
            throw capacity_error("markov transition-count classes exceed max_classes",
                                 static_cast<double>(limits.max_classes));
        }
    };

    // Diagonal entries do not affect balance; distribute them last.
    auto diag_rec = [&](auto& self, std::size_t pos, std::uint32_t left, std::size_t u, std::size_t v) -> void {
        if (pos + 1 == diag_idx.size()) {
            counts[diag_idx[pos]] = left;
            emit(u, v);
            return;
        }
        for (std::uint32_t c = 0; c <= left; ++c) {
            counts[diag_idx[pos]] = c;
            self(self, pos + 1, left - c, u, v);
        }
    };
    auto off_done = [&](std::uint32_t left) {
        std::vector<long> net(d, 0);   // out - in
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                net[i] += counts[i * d + j];
                net[j] -= counts[i * d + j];
            }
        }
        for (std::size_t u = 0; u < d; ++u) {
            // trail u -> v needs net = e_u - e_v
            std::optional<std::size_t> v;
            bool ok = true;
            for (std::size_t i = 0; i < d && ok; ++i) {
                const long want_u = (i == u) ? 1 : 0;
                const long diff = net[i] - want_u;
                if (diff == 0) continue;
                if (diff == -1 && !v) {
                    v = i;
                } else {
                    ok = false;
                }
            }
            if (!ok) continue;
            diag_rec(diag_rec, 0, left, u, v.value_or(u));
        }
    };
    auto off_rec = [&](auto& self, std::size_t pos, std::uint32_t left) -> void {
        if (pos == off_idx.size()) {
            off_done(left);
            return;
        }
        for (std::uint32_t c = 0; c <= left; ++c) {
            counts[off_idx[pos]] = c;
            self(self, pos + 1, left - c);
        }
        counts[off_idx[pos]] = 0;
    };
    off_rec(off_rec, 0, steps);

    // Re-key in lexicographic label order.
    std::vector<std::size_t> order(classes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(labels.begin() + static_cast<std::ptrdiff_t>(a * width),
                                            labels.begin() + static_cast<std::ptrdiff_t>((a + 1) * width),
                                            labels.begin() + static_cast<std::ptrdiff_t>(b * width),
                                            labels.begin() + static_cast<std::ptrdiff_t>((b + 1) * width));
    });
    ClassSpectrum cs;
    cs.site_dim = d;
    cs.sites = n;
    cs.log2_total_dim = static_cast<double>(n) * std::log2(static_cast<double>(d));
    cs.label_kind = LabelKind::transition_counts;
    cs.label_width = width;
    cs.classes.reserve(classes.size());
    cs.label_table.reserve(labels.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        SpectralClass c = classes[order[rank]];
        const auto first = labels.begin() + static_cast<std::ptrdiff_t>(order[rank] * width);
        cs.label_table.insert(cs.label_table.end(), first, first + static_cast<std::ptrdiff_t>(width));
        c.key = rank;
        cs.classes.push_back(c);
    }
    cs.sort();
    return cs;
}

inline void require_sites(std::size_t n) {
    if (n == 0) throw dimension_error("block length n must be positive");
}

}  // namespace detail

enum class MarkovPath { automatic, words, transition_counts };

inline ClassSpectrum class_spectrum(const SourceModel& src, std::size_t n, const SourceLimits& limits = {},
                                    MarkovPath path = MarkovPath::automatic) {
    detail::require_sites(n);
    if (const auto* s = src.as_iid()) return detail::iid_classes(*s, n, limits);
    const auto& m = *src.as_markov();
    if (path == MarkovPath::automatic) {
        const double log2_words = static_cast<double>(n) * std::log2(static_cast<double>(src.site_dim()));
        path = log2_words <= limits.word_log2_cap + 1e-9 ? MarkovPath::words : MarkovPath::transition_counts;
    }
    return path == MarkovPath::words ? detail::markov_word_classes(m, n, limits)
                                     : detail::markov_count_classes(m, n, limits);
}

// Word probabilities pi_{i1} M_{i1 i2} ... in lexicographic word order.
inline RealVector word_probabilities(const RotatedMarkovSource& src, std::size_t n) {
    RealVector p = src.initial;
    const Index d = src.transition.rows();
    for (std::size_t k = 1; k < n; ++k) {
        RealVector next(p.size() * d);
        for (Index w = 0; w < p.size(); ++w) {
            const Index last = w % d;
            for (Index j = 0; j < d; ++j) next[w * d + j] = p[w] * src.transition(last, j);
        }
        p = std::move(next);
    }
    return p;
}

inline DensityOperator block_state(const SourceModel& src, std::size_t n, const SourceLimits& limits = {}) {
    detail::require_sites(n);
    if (!detail::bounded_power(src.site_dim(), n, limits.dense_cap)) {
        std::ostringstream os;
        os << "block_state: d^n exceeds dense cap " << limits.dense_cap << "; use class_spectrum";
        throw capacity_error(os.str(), static_cast<double>(limits.dense_cap));
    }
    if (const auto* s = src.as_iid()) {
        return DensityOperator::trusted(kron_power(s->site_state.matrix(), n), 1e-9);
    }
    const auto& m = *src.as_markov();
    const Matrix diag = word_probabilities(m, n).cast<Complex>().asDiagonal();
    return DensityOperator::trusted(conjugate_sites(diag, m.rotation, n), 1e-9);
}

inline double entropy_rate_exact(const SourceModel& src) {
    if (const auto* s = src.as_iid()) {
        const RealVector ev = s->site_state.eigenvalues();
        double h = 0.0;
        for (Index i = 0; i < ev.size(); ++i) h += detail::entropy_term(ev[i]);
        return h;
    }
    const auto& m = *src.as_markov();
    double h = 0.0;
    for (Index i = 0; i < m.transition.rows(); ++i) {
        double row = 0.0;
        for (Index j = 0; j < m.transition.cols(); ++j) row += detail::entropy_term(m.transition(i, j));
        h += m.initial[i] * row;
    }
    return h;
}

struct ConsistencyReport {
    std::size_t n = 0;
    double residual_trace_last = 0.0;    // tr_last rho^(n+1) vs rho^(n)
    double residual_trace_first = 0.0;   // tr_first rho^(n+1) vs rho^(n)
    double tolerance = 1e-10;

    bool passed() const { return residual_trace_last <= tolerance && residual_trace_first <= tolerance; }
};

inline ConsistencyReport check_consistency(const SourceModel& src, std::size_t n, const SourceLimits& limits = {}) {
    detail::require_sites(n);
    const DensityOperator small = block_state(src, n, limits);
    const DensityOperator big = block_state(src, n + 1, limits);
    std::vector<std::size_t> dims(n + 1, src.site_dim());
    std::vector<std::size_t> head(n);
    std::iota(head.begin(), head.end(), std::size_t{0});
    std::vector<std::size_t> tail(n);
    std::iota(tail.begin(), tail.end(), std::size_t{1});
    ConsistencyReport r;
    r.n = n;
    r.residual_trace_last = max_abs(partial_trace(big.matrix(), dims, head) - small.matrix());
    r.residual_trace_first = max_abs(partial_trace(big.matrix(), dims, tail) - small.matrix());
    return r;
}

}  // namespace qcomp

// experiments.hpp - configuration, sweeps and report writing behind the qcomp CLI
//
// Config file (JSON):
//   {
//     "id": "binary",
//     "source": {"kind": "iid", "state": {"diag": [0.9, 0.1]}},
//     "n_list": [10, 100, 1000],
//     "epsilon_list": [0.01, 0.1, 0.3],
//     "target_rates": [0.25],
//     "dense_cap": 4096, "word_log2_cap": 24, "max_classes": 20000000,
//     "schedule": {"c": 1.0, "epsilon_min": 0.01},
//     "out": "out", "format": "csv", "seed": 1, "workers": 1,
//     "fidelity_trials": 1000
//   }
// A state is {"diag": [...]} or a matrix; matrix entries are numbers or
// [re, im] pairs. A rotated Markov source is
//   {"kind": "rotated_markov", "transition": [[...]], "rotation": "hadamard",
//    "initial": [...]}
// with rotation one of "identity", "hadamard" or a matrix, and "initial"
// optional (stationary distribution by default).
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qcomp/channels.hpp"
#include "qcomp/fidelity.hpp"
#include "qcomp/sources.hpp"
#include "qcomp/typicality.hpp"
#include "qcomp/validation.hpp"

namespace qcomp::exp {

using nlohmann::json;

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Format { csv, json };

inline Format parse_format(const std::string& s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw config_error("format must be csv or json, got '" + s + "'");
}

// eps_n = max(epsilon_min, c / sqrt(n))
struct Schedule {
    double c = 1.0;
    double epsilon_min = 0.01;

    double at(std::size_t n) const { return std::max(epsilon_min, c / std::sqrt(static_cast<double>(n))); }
};

struct ExperimentConfig {
    std::string id = "run";
    json source_spec;   // null when absent
    std::vector<std::size_t> n_list;
    std::vector<double> epsilon_list;
    std::vector<double> target_rates;
    SourceLimits limits;
    std::string out_dir = "out";
    Format format = Format::csv;
    std::uint64_t seed = 1;
    Schedule schedule;
    unsigned workers = 1;
    std::size_t fidelity_trials = 1000;
};

namespace detail {

inline Complex parse_entry(const json& e, const std::string& where) {
    if (e.is_number()) return {e.get<double>(), 0.0};
    if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        return {e[0].get<double>(), e[1].get<double>()};
    }
    throw config_error(where + ": matrix entries must be numbers or [re, im] pairs");
}

inline Matrix parse_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw config_error(where + ": expected a list of rows");
    const auto rows = static_cast<Index>(j.size());
    const auto cols = static_cast<Index>(j[0].size());
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw config_error(where + ": ragged rows");
        for (Index c = 0; c < cols; ++c) m(r, c) = parse_entry(row[static_cast<std::size_t>(c)], where);
    }
    return m;
}

inline RealMatrix parse_real_matrix(const json& j, const std::string& where) {
    const Matrix m = parse_matrix(j, where);
    if (m.imag().cwiseAbs().maxCoeff() != 0.0) throw config_error(where + ": entries must be real");
    return m.real();
}

inline std::vector<double> parse_reals(const json& j, const std::string& where) {
    if (!j.is_array()) throw config_error(where + ": expected a list of numbers");
    std::vector<double> v;
    for (const auto& e : j) {
        if (!e.is_number()) throw config_error(where + ": expected numbers");
        v.push_back(e.get<double>());
    }
    return v;
}

inline std::size_t parse_count(const json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw config_error(where + ": expected a non-negative integer");
    return j.get<std::size_t>();
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    const std::set<std::string> ok(known.begin(), known.end());
    for (const auto& [k, v] : j.items()) {
        if (!ok.count(k)) throw config_error(where + ": unknown key '" + k + "'");
    }
}

inline std::size_t source_site_dim(const json& s) {
    if (s.value("kind", "") == "iid") {
        const auto& st = s.at("state");
        return st.is_object() ? st.at("diag").size() : st.size();
    }
    return s.at("transition").size();
}

}  // namespace detail

// Structure and ranges only; the source itself is built by build_source.
inline ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw config_error("config must be a JSON object");
    detail::reject_unknown(j,
                           {"id", "source", "n_list", "epsilon_list", "target_rates", "dense_cap", "word_log2_cap",
                            "max_classes", "out", "format", "seed", "schedule", "workers", "fidelity_trials"},
                           "config");
    ExperimentConfig c;
    try {
        c.id = j.value("id", c.id);
        if (j.contains("source")) {
            c.source_spec = j.at("source");
            if (!c.source_spec.is_object()) throw config_error("source: expected an object");
            const std::string kind = c.source_spec.value("kind", "");
            if (kind == "iid") {
                detail::reject_unknown(c.source_spec, {"kind", "state"}, "source");
                if (!c.source_spec.contains("state")) throw config_error("source: iid needs 'state'");
            } else if (kind == "rotated_markov") {
                detail::reject_unknown(c.source_spec, {"kind", "transition", "rotation", "initial"}, "source");
                if (!c.source_spec.contains("transition")) throw config_error("source: rotated_markov needs 'transition'");
            } else {
                throw config_error("source.kind must be iid or rotated_markov");
            }
        }
        if (j.contains("n_list")) {
            for (const auto& e : j.at("n_list")) c.n_list.push_back(detail::parse_count(e, "n_list"));
        }
        if (j.contains("epsilon_list")) c.epsilon_list = detail::parse_reals(j.at("epsilon_list"), "epsilon_list");
        if (j.contains("target_rates")) c.target_rates = detail::parse_reals(j.at("target_rates"), "target_rates");
        if (j.contains("dense_cap")) c.limits.dense_cap = detail::parse_count(j.at("dense_cap"), "dense_cap");
        if (j.contains("word_log2_cap")) c.limits.word_log2_cap = j.at("word_log2_cap").get<double>();
        if (j.contains("max_classes")) c.limits.max_classes = detail::parse_count(j.at("max_classes"), "max_classes");
        c.out_dir = j.value("out", c.out_dir);
        if (j.contains("format")) c.format = parse_format(j.at("format").get<std::string>());
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            detail::reject_unknown(s, {"c", "epsilon_min"}, "schedule");
            c.schedule.c = s.value("c", c.schedule.c);
            c.schedule.epsilon_min = s.value("epsilon_min", c.schedule.epsilon_min);
        }
        if (j.contains("workers")) c.workers = static_cast<unsigned>(detail::parse_count(j.at("workers"), "workers"));
        if (j.contains("fidelity_trials")) c.fidelity_trials = detail::parse_count(j.at("fidelity_trials"), "fidelity_trials");
    } catch (const json::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error("config '" + path + "': " + e.what());
    }
    return parse_config(j);
}

// Range checks that hold for every command; run after CLI overrides.
inline void check_config(const ExperimentConfig& c) {
    for (std::size_t i = 0; i < c.n_list.size(); ++i) {
        if (c.n_list[i] == 0) throw config_error("n_list entries must be positive");
        if (i > 0 && c.n_list[i] <= c.n_list[i - 1]) throw config_error("n_list must be strictly ascending");
    }
    for (double e : c.epsilon_list) {
        if (!(e > 0.0 && e < 1.0)) throw config_error("epsilon_list entries must lie in (0,1)");
    }
    if (!(c.schedule.c > 0.0) || !(c.schedule.epsilon_min > 0.0 && c.schedule.epsilon_min < 1.0)) {
        throw config_error("schedule needs c > 0 and epsilon_min in (0,1)");
    }
    if (c.limits.dense_cap == 0) throw config_error("dense_cap must be positive");
    if (c.workers == 0) throw config_error("workers must be positive");
    if (!c.source_spec.is_null() && !c.target_rates.empty()) {
        const double top = std::log2(static_cast<double>(detail::source_site_dim(c.source_spec)));
        for (double r : c.target_rates) {
            if (!(r > 0.0 && r <= top + 1e-12)) throw config_error("target_rates entries must lie in (0, log2 d]");
        }
    }
}

// Throws invariant_error naming the violated source invariant.
inline SourceModel build_source(const json& s) {
    try {
        const std::string kind = s.at("kind").get<std::string>();
        if (kind == "iid") {
            const auto& st = s.at("state");
            if (st.is_object()) {
                detail::reject_unknown(st, {"diag"}, "source.state");
                return SourceModel::iid(DensityOperator::diagonal(detail::parse_reals(st.at("diag"), "source.state.diag")));
            }
            return SourceModel::iid(DensityOperator(detail::parse_matrix(st, "source.state")));
        }
        const RealMatrix m = detail::parse_real_matrix(s.at("transition"), "source.transition");
        Matrix u = Matrix::Identity(m.rows(), m.rows());
        if (s.contains("rotation")) {
            const auto& r = s.at("rotation");
            if (r.is_string()) {
                const auto name = r.get<std::string>();
                if (name == "hadamard") {
                    u = hadamard();
                } else if (name != "identity") {
                    throw config_error("source.rotation must be identity, hadamard or a matrix");
                }
            } else {
                u = detail::parse_matrix(r, "source.rotation");
            }
        }
        if (s.contains("initial")) {
            const auto p = detail::parse_reals(s.at("initial"), "source.initial");
            return SourceModel::rotated_markov(m, Eigen::Map<const RealVector>(p.data(), static_cast<Index>(p.size())), u);
        }
        return SourceModel::rotated_markov(m, u);
    } catch (const json::exception& e) {
        throw config_error(std::string("source: ") + e.what());
    } catch (const dimension_error& e) {
        throw config_error(std::string("source: ") + e.what());
    }
}

// ---- reports -------------------------------------------------------------

inline constexpr const char* schema_version = "report_v1";

struct ReportRow {
    std::string experiment;
    std::string command;
    std::size_t n = 0;
    std::string level_kind;
    double level = 0.0;
    std::optional<double> entropy_rate;
    std::optional<double> beta_per_n;
    std::optional<double> typical_mass;
    std::optional<double> typical_log2dim_per_n;
    std::optional<bool> window_bounds_ok;
    std::optional<double> rate;
    std::optional<double> rate_qubits;
    std::optional<double> subspace_mass;
    std::optional<double> fe;
    std::optional<double> fe_bound;
    std::optional<double> fbar_eigen;
    std::optional<double> f_output;
    std::optional<double> fs_lower;
    std::optional<double> fs_upper;
    std::optional<double> six_eta;
    std::string status = "ok";
    std::string reason;
    std::string note;
    double wall_time_s = 0.0;
};

inline const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> cols{
        "schema",      "experiment",   "command",  "n",           "level_kind",  "level",
        "entropy_rate", "beta_per_n",  "typical_mass", "typical_log2dim_per_n", "window_bounds_ok",
        "rate",        "rate_qubits",  "subspace_mass", "fe",     "fe_bound",    "fbar_eigen",
        "f_output",    "fs_lower",     "fs_upper", "six_eta",     "status",      "reason",
        "note",        "wall_time_s"};
    return cols;
}

struct Series {
    std::string name;   // file stem
    std::vector<std::pair<double, double>> points;
};

struct Report {
    std::string command;
    std::string experiment;
    std::vector<ReportRow> rows;
    std::vector<Series> series;
    std::vector<std::string> warnings;
    bool invariant_failure = false;
};

inline std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

inline std::string opt(const std::optional<double>& v) { return v ? format_real(*v) : "null"; }

inline std::string text(const std::string& s) { return s.empty() ? "null" : csv_field(s); }

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json text_json(const std::string& s) { return s.empty() ? json(nullptr) : json(s); }

}  // namespace detail

inline std::vector<std::string> row_cells(const ReportRow& r) {
    using detail::opt;
    using detail::text;
    return {schema_version,
            text(r.experiment),
            text(r.command),
            std::to_string(r.n),
            text(r.level_kind),
            format_real(r.level),
            opt(r.entropy_rate),
            opt(r.beta_per_n),
            opt(r.typical_mass),
            opt(r.typical_log2dim_per_n),
            r.window_bounds_ok ? (*r.window_bounds_ok ? "true" : "false") : "null",
            opt(r.rate),
            opt(r.rate_qubits),
            opt(r.subspace_mass),
            opt(r.fe),
            opt(r.fe_bound),
            opt(r.fbar_eigen),
            opt(r.f_output),
            opt(r.fs_lower),
            opt(r.fs_upper),
            opt(r.six_eta),
            text(r.status),
            text(r.reason),
            text(r.note),
            format_real(r.wall_time_s)};
}

inline json row_json(const ReportRow& r) {
    using detail::opt_json;
    using detail::text_json;
    json j;
    j["schema"] = schema_version;
    j["experiment"] = r.experiment;
    j["command"] = r.command;
    j["n"] = r.n;
    j["level_kind"] = text_json(r.level_kind);
    j["level"] = r.level;
    j["entropy_rate"] = opt_json(r.entropy_rate);
    j["beta_per_n"] = opt_json(r.beta_per_n);
    j["typical_mass"] = opt_json(r.typical_mass);
    j["typical_log2dim_per_n"] = opt_json(r.typical_log2dim_per_n);
    j["window_bounds_ok"] = r.window_bounds_ok ? json(*r.window_bounds_ok) : json(nullptr);
    j["rate"] = opt_json(r.rate);
    j["rate_qubits"] = opt_json(r.rate_qubits);
    j["subspace_mass"] = opt_json(r.subspace_mass);
    j["fe"] = opt_json(r.fe);
    j["fe_bound"] = opt_json(r.fe_bound);
    j["fbar_eigen"] = opt_json(r.fbar_eigen);
    j["f_output"] = opt_json(r.f_output);
    j["fs_lower"] = opt_json(r.fs_lower);
    j["fs_upper"] = opt_json(r.fs_upper);
    j["six_eta"] = opt_json(r.six_eta);
    j["status"] = r.status;
    j["reason"] = text_json(r.reason);
    j["note"] = text_json(r.note);
    j["wall_time_s"] = r.wall_time_s;
    return j;
}

inline std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    }
    return os.str();
}

inline std::string report_csv(const Report& rep) {
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rep.rows) cells.push_back(row_cells(r));
    return to_csv(report_columns(), cells);
}

inline json report_json(const Report& rep) {
    json j;
    j["schema"] = schema_version;
    j["command"] = rep.command;
    j["experiment"] = rep.experiment;
    j["columns"] = report_columns();
    j["rows"] = json::array();
    for (const auto& r : rep.rows) j["rows"].push_back(row_json(r));
    j["warnings"] = rep.warnings;
    return j;
}

// Bounds every emitted fidelity must satisfy; returns a reason code or "".
inline std::string check_row_bounds(const ReportRow& r, double tol = 1e-9) {
    auto unit = [&](const std::optional<double>& v) { return !v || (*v >= -tol && *v <= 1.0 + tol); };
    if (!unit(r.fe) || !unit(r.fbar_eigen) || !unit(r.f_output) || !unit(r.fs_lower) || !unit(r.fs_upper) ||
        !unit(r.typical_mass) || !unit(r.subspace_mass)) {
        return "fidelity_out_of_range";
    }
    if (r.six_eta && (*r.six_eta < -tol || *r.six_eta > 6.0 + tol)) return "six_eta_out_of_range";
    if (r.fe && r.fbar_eigen && *r.fe > *r.fbar_eigen + tol) return "fe_above_fbar";
    if (r.fbar_eigen && r.f_output && *r.fbar_eigen > *r.f_output + tol) return "fbar_above_f";
    return {};
}

inline void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << body;
}

inline std::string series_text(const Series& s) {
    std::string out;
    for (const auto& [x, y] : s.points) out += format_real(x) + " " + format_real(y) + "\n";
    return out;
}

// <out>/<command>.csv|json plus one <name>.dat per series.
inline std::filesystem::path write_report(const Report& rep, const std::string& out_dir, Format format) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    std::filesystem::path main_file = dir / (rep.command + (format == Format::csv ? ".csv" : ".json"));
    write_file(main_file, format == Format::csv ? report_csv(rep) : report_json(rep).dump(2) + "\n");
    for (const auto& s : rep.series) write_file(dir / (s.name + ".dat"), series_text(s));
    return main_file;
}

// ---- worker pool ---------------------------------------------------------

// Runs task(i) for i in [0, count) on `workers` threads; results keep index
// order. The first exception (by index) is rethrown after all tasks finish.
template <class R, class F>
std::vector<R> run_pool(std::size_t count, unsigned workers, F&& task) {
    std::vector<std::optional<R>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                slots[i].emplace(task(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<R> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// ---- commands ------------------------------------------------------------

namespace detail {

using clock = std::chrono::steady_clock;

inline double seconds_since(clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
}

inline std::string level_tag(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

inline SourceModel require_source(const ExperimentConfig& c) {
    if (c.source_spec.is_null()) throw config_error("this command needs a 'source'");
    if (c.n_list.empty()) throw config_error("this command needs a non-empty 'n_list'");
    return build_source(c.source_spec);
}

inline void finish(Report& rep) {
    for (auto& r : rep.rows) {
        if (r.status == "skipped") continue;
        const std::string bad = check_row_bounds(r);
        if (!bad.empty()) {
            r.status = "fail";
            r.reason = bad;
        }
        if (r.status == "fail") rep.invariant_failure = true;
    }
}

inline void add_point(Report& rep, const std::string& name, double x, const std::optional<double>& y) {
    if (!y) return;
    auto it = std::find_if(rep.series.begin(), rep.series.end(), [&](const Series& s) { return s.name == name; });
    if (it == rep.series.end()) {
        rep.series.push_back({name, {}});
        it = std::prev(rep.series.end());
    }
    it->points.emplace_back(x, *y);
}

}  // namespace detail

// beta/n, typical-window mass and dimension per (n, eps) from class spectra.
inline Report cmd_aep(const ExperimentConfig& cfg) {
    const SourceModel src = detail::require_source(cfg);
    if (cfg.epsilon_list.empty()) throw config_error("aep needs a non-empty 'epsilon_list'");
    const double s = entropy_rate_exact(src);
    std::vector<double> eps = cfg.epsilon_list;
    std::sort(eps.begin(), eps.end());

    auto per_n = run_pool<std::vector<ReportRow>>(cfg.n_list.size(), cfg.workers, [&](std::size_t i) {
        const std::size_t n = cfg.n_list[i];
        const auto t0 = detail::clock::now();
        std::vector<ReportRow> rows;
        std::optional<ClassSpectrum> cs;
        std::string skip;
        try {
            cs = class_spectrum(src, n, cfg.limits);
        } catch (const capacity_error&) {
            skip = "spectral_cap";
        }
        for (double e : eps) {
            ReportRow r;
            r.experiment = cfg.id;
            r.command = "aep";
            r.n = n;
            r.level_kind = "epsilon";
            r.level = e;
            r.entropy_rate = s;
            if (!cs) {
                r.status = "skipped";
                r.reason = skip;
            } else {
                const auto h = beta(*cs, e);
                const auto t = typical_projector(*cs, n, s, e);
                r.beta_per_n = h.log2_dim / static_cast<double>(n);
                r.typical_mass = t.mass;
                if (!t.empty()) r.typical_log2dim_per_n = t.log2_dim / static_cast<double>(n);
                r.window_bounds_ok = window_dimension_bounds_hold(t);
                if (!*r.window_bounds_ok) {
                    r.status = "fail";
                    r.reason = "window_bounds";
                }
            }
            r.wall_time_s = detail::seconds_since(t0);
            rows.push_back(std::move(r));
        }
        return rows;
    });

    Report rep{"aep", cfg.id, {}, {}, {}, false};
    for (auto& rows : per_n) {
        for (auto& r : rows) {
            detail::add_point(rep, "aep_beta_eps" + detail::level_tag(r.level), static_cast<double>(r.n), r.beta_per_n);
            rep.rows.push_back(std::move(r));
        }
    }
    detail::finish(rep);
    return rep;
}

// Dense epsilon-mode schemes: rate, F_e of the round trip, (1-eps)^2, Fbar.
// Uses epsilon_list when given, the schedule otherwise.
inline Report cmd_compress(const ExperimentConfig& cfg) {
    const SourceModel src = detail::require_source(cfg);
    const double s = entropy_rate_exact(src);
    struct Task {
        std::size_t n;
        double eps;
    };
    std::vector<Task> tasks;
    for (std::size_t n : cfg.n_list) {
        if (cfg.epsilon_list.empty()) {
            tasks.push_back({n, cfg.schedule.at(n)});
        } else {
            std::vector<double> eps = cfg.epsilon_list;
            std::sort(eps.begin(), eps.end());
            for (double e : eps) tasks.push_back({n, e});
        }
    }
    const std::string kind = cfg.epsilon_list.empty() ? "epsilon_schedule" : "epsilon";

    auto rows = run_pool<ReportRow>(tasks.size(), cfg.workers, [&](std::size_t i) {
        const auto [n, eps] = tasks[i];
        const auto t0 = detail::clock::now();
        ReportRow r;
        r.experiment = cfg.id;
        r.command = "compress";
        r.n = n;
        r.level_kind = kind;
        r.level = eps;
        r.entropy_rate = s;
        if (!(eps > 0.0 && eps < 1.0)) {
            r.status = "skipped";
            r.reason = "epsilon_out_of_range";
            return r;
        }
        if (!qcomp::detail::bounded_power(src.site_dim(), n, cfg.limits.dense_cap)) {
            r.status = "skipped";
            r.reason = "dense_cap";
            return r;
        }
        const auto scheme = make_scheme(src, n, EpsilonLevel{eps}, cfg.limits);
        const auto rt = scheme.round_trip();
        const double mass = scheme.captured_mass;
        r.rate = scheme.rate();
        r.rate_qubits = scheme.qubit_rate();
        r.subspace_mass = mass;
        r.fe = entanglement_fidelity_kraus(scheme.state, rt);
        r.fe_bound = (1.0 - eps) * (1.0 - eps);
        const auto b = fs_bounds(scheme.state, scheme.spectrum, rt, scheme.rank());
        r.fbar_eigen = b.lower;
        r.f_output = b.fidelity_part;
        r.fs_lower = b.lower;
        r.fs_upper = b.upper;
        r.six_eta = b.six_eta;
        if (mass < 1.0 - eps) {
            r.status = "fail";
            r.reason = "mass_below_level";
        } else if (*r.fe < mass * mass - 1e-9) {
            r.status = "fail";
            r.reason = "fe_below_mass_squared";
        }
        r.wall_time_s = detail::seconds_since(t0);
        return r;
    });

    Report rep{"compress", cfg.id, std::move(rows), {}, {}, false};
    for (const auto& r : rep.rows) {
        const std::string suffix = kind == "epsilon" ? "_eps" + detail::level_tag(r.level) : "";
        detail::add_point(rep, "compress_fe" + suffix, static_cast<double>(r.n), r.fe);
        detail::add_point(rep, "compress_rate" + suffix, static_cast<double>(r.n), r.rate);
    }
    detail::finish(rep);
    return rep;
}

// Sub-rate bound 6 eta_{floor(2^{nR})} from class spectra, plus the actual
// fidelities of the dense R-mode scheme where d^n fits under the cap.
inline Report cmd_subrate(const ExperimentConfig& cfg) {
    const SourceModel src = detail::require_source(cfg);
    if (cfg.target_rates.empty()) throw config_error("subrate needs a non-empty 'target_rates'");
    const double s = entropy_rate_exact(src);
    const double log2_d = std::log2(static_cast<double>(src.site_dim()));
    std::vector<double> rates = cfg.target_rates;
    std::sort(rates.begin(), rates.end());

    Report rep{"subrate", cfg.id, {}, {}, {}, false};
    for (double r : rates) {
        if (r >= s) {
            rep.warnings.push_back("target rate " + format_real(r) + " is not below the entropy rate " + format_real(s));
        }
    }
    struct Task {
        std::size_t n;
        double rate;
    };
    std::vector<Task> tasks;
    for (std::size_t n : cfg.n_list) {
        for (double r : rates) tasks.push_back({n, r});
    }

    rep.rows = run_pool<ReportRow>(tasks.size(), cfg.workers, [&](std::size_t i) {
        const auto [n, rate] = tasks[i];
        const auto t0 = detail::clock::now();
        ReportRow r;
        r.experiment = cfg.id;
        r.command = "subrate";
        r.n = n;
        r.level_kind = "rate";
        r.level = rate;
        r.entropy_rate = s;
        if (rate >= s) r.note = "rate_not_below_entropy";
        const double log2_total = static_cast<double>(n) * log2_d;
        const double d = rate_dimension(n, rate, log2_total);
        if (d < 1.0) {
            r.status = "skipped";
            r.reason = "empty_subspace";
            return r;
        }
        try {
            r.six_eta = 6.0 * eta(class_spectrum(src, n, cfg.limits), d);
        } catch (const capacity_error&) {
            r.status = "skipped";
            r.reason = "spectral_cap";
            return r;
        }
        if (qcomp::detail::bounded_power(src.site_dim(), n, cfg.limits.dense_cap)) {
            const auto scheme = make_scheme(src, n, TargetRate{rate}, cfg.limits);
            const auto rt = scheme.round_trip();
            r.rate = scheme.rate();
            r.rate_qubits = scheme.qubit_rate();
            r.subspace_mass = scheme.captured_mass;
            r.fe = entanglement_fidelity_kraus(scheme.state, rt);
            const auto b = fs_bounds(scheme.state, scheme.spectrum, rt, scheme.rank());
            r.fbar_eigen = b.lower;
            r.f_output = b.fidelity_part;
            r.fs_lower = b.lower;
            r.fs_upper = b.upper;
            if (std::abs(b.six_eta - *r.six_eta) > 1e-9) {
                r.status = "fail";
                r.reason = "eta_path_mismatch";
            }
        } else {
            r.note += r.note.empty() ? "dense_cap" : ";dense_cap";
        }
        r.wall_time_s = detail::seconds_since(t0);
        return r;
    });

    for (const auto& r : rep.rows) {
        const std::string tag = "_R" + detail::level_tag(r.level);
        detail::add_point(rep, "subrate_six_eta" + tag, static_cast<double>(r.n), r.six_eta);
        detail::add_point(rep, "subrate_fbar" + tag, static_cast<double>(r.n), r.fbar_eigen);
    }
    detail::finish(rep);
    return rep;
}

struct ValidateReport {
    std::vector<validation::SuiteResult> suites;
    bool failed = false;
};

// Reference sources plus the configured one (if any).
inline ValidateReport cmd_validate(const ExperimentConfig& cfg) {
    ValidateReport out;
    auto sources = validation::reference_sources();
    if (!cfg.source_spec.is_null()) {
        validation::SuiteResult s{"source.config", 0.0};
        try {
            sources.push_back({"config", build_source(cfg.source_spec)});
            s.record(0.0);
        } catch (const invariant_error& e) {
            s.record(-1.0, e.invariant());
        }
        out.suites.push_back(s);
    }
    auto suites = validation::run_all(cfg.seed, cfg.limits, sources, cfg.fidelity_trials);
    out.suites.insert(out.suites.end(), suites.begin(), suites.end());
    for (const auto& s : out.suites) {
        if (s.status() == validation::Status::fail) out.failed = true;
    }
    return out;
}

inline std::string validate_csv(const ValidateReport& v) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : v.suites) {
        rows.push_back({schema_version, s.name, std::to_string(s.trials), std::to_string(s.skipped_trials),
                        s.trials ? format_real(s.worst_slack) : "null", format_real(s.tolerance),
                        validation::to_string(s.status()), detail::text(s.reason)});
    }
    return to_csv({"schema", "suite", "trials", "skipped_trials", "worst_slack", "tolerance", "status", "reason"}, rows);
}

inline json validate_json(const ValidateReport& v) {
    json j;
    j["schema"] = schema_version;
    j["command"] = "validate";
    j["suites"] = json::array();
    for (const auto& s : v.suites) {
        j["suites"].push_back({{"suite", s.name},
                               {"trials", s.trials},
                               {"skipped_trials", s.skipped_trials},
                               {"worst_slack", s.trials ? json(s.worst_slack) : json(nullptr)},
                               {"tolerance", s.tolerance},
                               {"status", validation::to_string(s.status())},
                               {"reason", detail::text_json(s.reason)}});
    }
    j["passed"] = !v.failed;
    return j;
}

}  // namespace qcomp::exp

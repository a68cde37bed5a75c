// qcomp - run typical-subspace and compression experiments from a JSON config
//
//   qcomp aep      --config cfg.json [--out DIR] [--format csv|json]
//   qcomp compress --config cfg.json [--dense-cap N]
//   qcomp subrate  --config cfg.json
//   qcomp validate [--config cfg.json] [--seed N]
//
// Exit status: 0 success, 1 invariant failure, 2 configuration error.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qcomp/experiments.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> dense_cap;
    std::optional<std::string> format;
};

qcomp::exp::ExperimentConfig resolve(const Overrides& o) {
    qcomp::exp::ExperimentConfig cfg;
    if (!o.config.empty()) cfg = qcomp::exp::load_config(o.config);
    if (o.out) cfg.out_dir = *o.out;
    if (o.seed) cfg.seed = *o.seed;
    if (o.dense_cap) cfg.limits.dense_cap = *o.dense_cap;
    if (o.format) cfg.format = qcomp::exp::parse_format(*o.format);
    qcomp::exp::check_config(cfg);
    return cfg;
}

int run_sweep(const std::string& command, const qcomp::exp::ExperimentConfig& cfg) {
    using namespace qcomp::exp;
    Report rep = command == "aep" ? cmd_aep(cfg) : command == "compress" ? cmd_compress(cfg) : cmd_subrate(cfg);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    const auto path = write_report(rep, cfg.out_dir, cfg.format);
    std::size_t ok = 0, skipped = 0, failed = 0;
    for (const auto& r : rep.rows) {
        if (r.status == "ok") ++ok;
        else if (r.status == "skipped") ++skipped;
        else ++failed;
    }
    std::cout << command << ": " << rep.rows.size() << " rows (" << ok << " ok, " << skipped << " skipped, "
              << failed << " failed) -> " << path.string() << "\n";
    for (const auto& r : rep.rows) {
        if (r.status == "fail") std::cerr << "invariant failure: n=" << r.n << " level=" << r.level << " " << r.reason << "\n";
    }
    return rep.invariant_failure ? 1 : 0;
}

int run_validate(const qcomp::exp::ExperimentConfig& cfg) {
    using namespace qcomp::exp;
    const ValidateReport v = cmd_validate(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path path =
        std::filesystem::path(cfg.out_dir) / (cfg.format == Format::csv ? "validate.csv" : "validate.json");
    write_file(path, cfg.format == Format::csv ? validate_csv(v) : validate_json(v).dump(2) + "\n");
    for (const auto& s : v.suites) {
        std::printf("%-40s %-8s trials=%-6zu skipped=%-4zu worst_slack=%s%s%s\n", s.name.c_str(),
                    qcomp::validation::to_string(s.status()), s.trials, s.skipped_trials,
                    s.trials ? format_real(s.worst_slack).c_str() : "null", s.reason.empty() ? "" : " reason=",
                    s.reason.c_str());
    }
    std::cout << (v.failed ? "validate: FAIL" : "validate: all suites passed") << " -> " << path.string() << "\n";
    return v.failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum source compression experiments"};
    app.require_subcommand(1);
    Overrides o;
    for (const char* name : {"aep", "compress", "subrate", "validate"}) {
        auto* sub = app.add_subcommand(name);
        auto* cfg = sub->add_option("--config", o.config, "JSON experiment config");
        if (std::string(name) != "validate") cfg->required();
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "random seed");
        sub->add_option("--dense-cap", o.dense_cap, "largest dense matrix dimension");
        sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const auto cfg = resolve(o);
        return command == "validate" ? run_validate(cfg) : run_sweep(command, cfg);
    } catch (const qcomp::exp::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qcomp::invariant_error& e) {
        std::cerr << "invariant failure [" << e.invariant() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

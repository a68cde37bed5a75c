// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [criterion...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qcomp/channels.hpp"
#include "qcomp/fidelity.hpp"
#include "qcomp/random.hpp"
#include "qcomp/sources.hpp"
#include "qcomp/typicality.hpp"
#include "qcomp/validation.hpp"

using namespace qcomp;

namespace {

constexpr std::uint64_t seed = 20240601;

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void check(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << " [failed: " << what << "]";
        }
    }
};

SourceModel binary_iid() { return SourceModel::iid(DensityOperator::diagonal({0.9, 0.1})); }

std::string g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.7g", x);
    return buf;
}

void suite_checks(Outcome& o, const validation::SuiteResult& s) {
    o.detail << " " << s.name << " trials=" << s.trials << " worst=" << g(s.worst_slack);
    o.check(s.status() == validation::Status::pass && s.skipped_trials == 0, s.name);
}

void aep_convergence(Outcome& o) {
    const auto cs = class_spectrum(binary_iid(), 1000);
    std::vector<double> per_n;
    for (double eps : {0.01, 0.1, 0.3}) {
        const double b = beta(cs, eps).log2_dim / 1000.0;
        per_n.push_back(b);
        o.detail << " beta/n(eps=" << eps << ")=" << g(b);
        o.check(std::abs(b - 0.46900) <= 0.05, "|beta/n - 0.469| <= 0.05 at eps=" + g(eps));
    }
    const double spread = *std::max_element(per_n.begin(), per_n.end()) - *std::min_element(per_n.begin(), per_n.end());
    o.detail << " spread=" << g(spread);
    o.check(spread <= 0.02, "eps spread <= 0.02");
}

void markov_convergence(Outcome& o) {
    const auto src = SourceModel::rotated_markov(validation::reference_chain(), hadamard());
    const double s = entropy_rate_exact(src);
    auto dev = [&](std::size_t n) {
        const auto cs = class_spectrum(src, n, {}, MarkovPath::words);
        return std::abs(beta(cs, 0.1).log2_dim / static_cast<double>(n) - s);
    };
    const double d6 = dev(6);
    const double d20 = dev(20);
    o.detail << " s=" << g(s) << " dev(6)=" << g(d6) << " dev(20)=" << g(d20);
    o.check(std::abs(s - 0.55750) <= 5e-5, "s = 0.55750");
    o.check(d20 <= 0.15, "|beta/n - s| <= 0.15 at n=20");
    o.check(d20 < d6, "dev(20) < dev(6)");
}

void dense_scheme(Outcome& o) {
    const auto scheme = make_scheme(binary_iid(), 8, EpsilonLevel{0.1});
    const double fe = entanglement_fidelity_kraus(scheme.state, scheme.round_trip());
    const double mass = scheme.captured_mass;
    o.detail << " rank=" << scheme.rank() << " rate=" << g(scheme.rate()) << " mass=" << g(mass) << " F_e=" << g(fe);
    o.check(fe >= 0.81, "F_e >= (1-eps)^2");
    o.check(fe >= mass * mass - 1e-9, "F_e >= (tr rho P)^2");
    o.check(scheme.rate() < 1.0, "rate < 1");
}

void subrate_decay(Outcome& o) {
    const auto src = binary_iid();
    double prev = 7.0;
    double last = 7.0;
    for (std::size_t n : {50u, 100u, 200u, 400u}) {
        const double d = rate_dimension(n, 0.25, static_cast<double>(n));
        last = 6.0 * eta(class_spectrum(src, n), d);
        o.detail << " 6eta(" << n << ")=" << g(last);
        o.check(last < prev, "6eta decreasing at n=" + std::to_string(n));
        prev = last;
    }
    o.check(last <= 0.01, "6eta <= 0.01 at n=400");
    double prev_f = 2.0;
    for (std::size_t n : {6u, 8u, 10u}) {
        const auto scheme = make_scheme(src, n, TargetRate{0.25});
        const double f = ensemble_fidelity(Ensemble::eigen(scheme.spectrum), scheme.round_trip());
        o.detail << " Fbar(" << n << ")=" << g(f);
        o.check(f < prev_f, "Fbar strictly decreasing at n=" + std::to_string(n));
        prev_f = f;
    }
}

void fidelity_suite(Outcome& o) {
    rnd::Rng rng(seed);
    const auto f = validation::fidelity_identities(rng, 1000, {});
    for (const auto* s : {&f.estimate, &f.relation, &f.routes, &f.completeness, &f.monotone, &f.concave}) {
        o.check(s->trials >= 1000, s->name + " ran 1000 trials");
        suite_checks(o, *s);
    }
}

void oracle_equivalences(Outcome& o) {
    rnd::Rng rng(seed + 1);
    const auto sources = validation::reference_sources();
    suite_checks(o, validation::source_oracle(sources, 8, {}));
    suite_checks(o, validation::beta_exhaustive(rng, 50));
    suite_checks(o, validation::eta_bruteforce(rng, 14));
}

void consistency(Outcome& o) {
    suite_checks(o, validation::source_consistency(validation::reference_sources(), 7, {}));
}

void relative_entropy_monotone(Outcome& o) {
    rnd::Rng rng(seed + 2);
    suite_checks(o, validation::relative_entropy_monotonicity(rng, 200));
}

struct Criterion {
    int id;
    const char* title;
    double budget_s;   // 0: no runtime limit
    std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "AEP convergence, IID(0.9,0.1), n=1000", 5.0, aep_convergence},
        {2, "AEP convergence, rotated Markov chain", 30.0, markov_convergence},
        {3, "dense scheme at n=8, eps=0.1", 10.0, dense_scheme},
        {4, "sub-rate bound decay, R=0.25", 10.0, subrate_decay},
        {5, "fidelity identities, 1000 triples", 60.0, fidelity_suite},
        {6, "oracle equivalences", 0.0, oracle_equivalences},
        {7, "consistency and stationarity", 0.0, consistency},
        {8, "relative entropy monotonicity", 0.0, relative_entropy_monotone},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0.0) o.check(secs < c.budget_s, "runtime < " + g(c.budget_s) + " s");
        if (!o.ok) ++failed;
        std::printf("criterion %d: %s  %s (%.2f s)%s\n", c.id, o.ok ? "PASS" : "FAIL", c.title, secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}

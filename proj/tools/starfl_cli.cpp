// starfl: trial, sweep, validate and convergence runs from the command line.
//
// Exit codes: 0 success, 1 only infeasible results, 2 usage or input error,
// 3 numerical failure (including failed validation checks).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "starfl/sim/sweep.hpp"
#include "starfl/sim/validate.hpp"

using namespace starfl;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> scenarios;
    bool verbose = false;
};

SystemConfig load(const Common& o) {
    SystemConfig c = o.config.empty() ? SystemConfig{} : load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    return c;
}

std::vector<Scenario> scenarios(const Common& o) {
    if (o.scenarios.empty()) return {kScenarios.begin(), kScenarios.end()};
    std::vector<Scenario> s;
    for (const auto& n : o.scenarios) s.push_back(parse_scenario(n));
    return s;
}

// Writes to --out when given, else stdout.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
    if (path.empty()) {
        fn(std::cout);
        return;
    }
    std::ofstream os(path);
    if (!os) throw InvalidArgument("cannot write output file: " + path);
    fn(os);
}

int run_trial_cmd(const Common& o, int trial) {
    const auto c = load(o);
    const auto rs = sim::run_trial(c, trial, scenarios(o));
    bool any = false;
    auto arr = nlohmann::json::array();
    for (const auto& r : rs) {
        any = any || r.feasible;
        std::cout << to_string(r.scenario) << ": ";
        if (r.feasible)
            std::cout << "E = " << r.energy.total << " J (harvest " << r.energy.harvest << ", downlink "
                      << r.energy.downlink << ")\n";
        else
            std::cout << "infeasible (" << r.reason << ")\n";
        if (o.verbose && r.feasible) std::cout << alloc::serialize_plan(r.plan, c) << '\n';
        arr.push_back(sim::trial_json(r));
    }
    if (!o.out.empty()) emit(o.out, [&](std::ostream& os) { os << arr.dump(2) << '\n'; });
    return any ? 0 : 1;
}

int run_sweep_cmd(const Common& o, const std::string& spec_path, const std::string& json_path, int trials) {
    auto spec = sim::load_sweep(spec_path);
    if (!o.config.empty()) spec.base = load_config(o.config);
    if (o.seed) spec.base.seed = *o.seed;
    if (!o.scenarios.empty()) spec.scenarios = scenarios(o);
    if (trials > 0) spec.trials = trials;
    const auto res = sim::run_sweep(spec);
    emit(o.out, [&](std::ostream& os) { sim::write_csv(os, res.rows); });
    if (!json_path.empty())
        emit(json_path, [&](std::ostream& os) { os << sim::records_json(spec.param, res.records).dump(1) << '\n'; });
    if (o.verbose)
        for (const auto& r : res.rows)
            std::cerr << spec.param << '=' << r.value << ' ' << to_string(r.scenario) << ": " << r.mean << " J, "
                      << r.infeasible_rate * 100 << "% infeasible\n";
    for (const auto& r : res.rows)
        if (r.infeasible_rate < 1.0) return 0;
    return 1;
}

int run_validate_cmd(const Common& o, int instances) {
    const auto rep = sim::validate(load(o), instances, std::cout);
    std::cout << rep.checks - rep.failures << '/' << rep.checks << " checks passed\n";
    return rep.ok() ? 0 : 3;
}

int run_convergence_cmd(const Common& o, int trials) {
    const auto c = load(o);
    emit(o.out, [&](std::ostream& os) {
        os << "trial,phase,mode,subproblem,iteration,objective,fairness_residual\n" << std::setprecision(17);
        for (int t = 0; t < trials; ++t) {
            sim::TrialInstance in(c, t);
            const std::pair<Phase, Mode> runs[] = {{Phase::e, Mode::ES},   {Phase::u, Mode::ES}, {Phase::u, Mode::TS},
                                                   {Phase::d, Mode::ES},   {Phase::d, Mode::TS}, {Phase::e, Mode::CONV},
                                                   {Phase::u, Mode::CONV}, {Phase::d, Mode::CONV}};
            for (auto [ph, m] : runs) {
                const auto& r = in.phase(ph, m);
                for (std::size_t s = 0; s < r.traces.size(); ++s)
                    for (const auto& p : r.traces[s])
                        os << t << ',' << to_string(ph) << ',' << to_string(m) << ',' << s << ',' << p.iteration << ','
                           << p.objective << ',' << p.fairness_residual << '\n';
            }
            if (o.verbose) std::cerr << "trial " << t << " done\n";
        }
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"STAR-RIS WPT-FL energy minimization simulator"};
    app.require_subcommand(1);
    Common o;
    auto common = [&](CLI::App* s) {
        s->add_option("--config", o.config, "Config file (key = value)");
        s->add_option("--out", o.out, "Output file (default: stdout)");
        s->add_option("--seed", o.seed, "Master seed (overrides the config)");
        s->add_option("--scenario", o.scenarios, "Scenario(s): ES-ES, ES-TS, TS-ES, TS-TS, CONV")->delimiter(',');
        s->add_flag("--verbose", o.verbose, "Print plans or progress");
    };
    int trial = 0, trials = 0, instances = 5, conv_trials = 10;
    std::string spec_path, json_path;

    auto* t = app.add_subcommand("trial", "Run one trial and dump the plans");
    common(t);
    t->add_option("--trial", trial, "Trial index")->check(CLI::NonNegativeNumber);
    auto* s = app.add_subcommand("sweep", "Run a parameter sweep to CSV");
    common(s);
    s->add_option("spec", spec_path, "Sweep file")->required();
    s->add_option("--json", json_path, "Per-trial JSON dump");
    s->add_option("--trials", trials, "Override the trial count")->check(CLI::PositiveNumber);
    auto* v = app.add_subcommand("validate", "Run the property and oracle checks");
    common(v);
    v->add_option("--instances", instances, "Draws to check")->check(CLI::PositiveNumber);
    auto* cv = app.add_subcommand("convergence", "Write per-iteration BCD traces as CSV");
    common(cv);
    cv->add_option("--trials", conv_trials, "Number of draws")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (*t) return run_trial_cmd(o, trial);
        if (*s) return run_sweep_cmd(o, spec_path, json_path, trials);
        if (*v) return run_validate_cmd(o, instances);
        return run_convergence_cmd(o, conv_trials);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}

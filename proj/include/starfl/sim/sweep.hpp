#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "starfl/sim/trial.hpp"

namespace starfl::sim {

inline const std::vector<std::string>& sweepable() {
    static const std::vector<std::string> k{"K", "N", "M", "eta", "P_max", "T", "C_k", "L_local"};
    return k;
}

struct SweepSpec {
    std::string param;
    std::vector<double> values;
    std::vector<Scenario> scenarios{kScenarios.begin(), kScenarios.end()};
    int trials = 0;  // 0: take from the base config
    SystemConfig base;

    void validate() const {
        require(std::find(sweepable().begin(), sweepable().end(), param) != sweepable().end(),
                "sweep: parameter '" + param + "' cannot be swept (K, N, M, eta, P_max, T, C_k, L_local)");
        require(!values.empty(), "sweep: empty value list");
        require(std::is_sorted(values.begin(), values.end()), "sweep: values must be sorted");
        require(!scenarios.empty(), "sweep: empty scenario list");
        require(trials >= 0, "sweep: trials must be >= 1");
    }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = starfl::detail::trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

/// Sweep file: `param`, `values` (comma list), optional `scenarios`, `trials`
/// and `config` (path relative to the sweep file). Any other key overrides
/// the base config.
inline SweepSpec parse_sweep(std::istream& in, const std::filesystem::path& dir = ".", SystemConfig base = {}) {
    SweepSpec s;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::string line;
    while (std::getline(in, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = starfl::detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, "sweep: expected 'key = value' in '" + line + "'");
        const auto key = starfl::detail::trim(line.substr(0, eq)), val = starfl::detail::trim(line.substr(eq + 1));
        if (key == "param") {
            s.param = val;
        } else if (key == "values") {
            for (const auto& v : detail::split_list(val)) s.values.push_back(starfl::detail::parse_double("values", v));
        } else if (key == "scenarios") {
            s.scenarios.clear();
            for (const auto& v : detail::split_list(val)) s.scenarios.push_back(parse_scenario(v));
        } else if (key == "trials") {
            s.trials = static_cast<int>(starfl::detail::parse_int("trials", val));
            require(s.trials >= 1, "sweep: trials must be >= 1");
        } else if (key == "config") {
            base = load_config((dir / val).string());
        } else {
            overrides.emplace_back(key, val);
        }
    }
    for (const auto& [k, v] : overrides) set_param(base, k, v);
    base.validate();
    s.base = base;
    s.validate();
    return s;
}

inline SweepSpec load_sweep(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open sweep file: " + path);
    return parse_sweep(in, std::filesystem::path(path).parent_path());
}

/// Worker count: STARFL_WORKERS, else cfg.workers, else hardware threads.
inline int worker_count(const SystemConfig& c) {
    if (const char* env = std::getenv("STARFL_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<int>(v);
    }
    if (c.workers > 0) return c.workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on a bounded pool. The first exception is
/// rethrown after all workers stop.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex m;
    auto body = [&] {
        for (int i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lk(m);
                if (!err) err = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < std::min(workers, n); ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

/// Per-trial record of one swept value.
struct SweepRecord {
    double value = 0.0;
    TrialResult result;
};

struct SweepRow {
    std::string param;
    double value = 0.0;
    Scenario scenario = Scenario::ES_ES;
    double mean = 0.0;
    double stderr_ = 0.0;
    double infeasible_rate = 0.0;
    int trials = 0;
};

struct SweepOutput {
    std::vector<SweepRow> rows;
    std::vector<SweepRecord> records;  // sorted by (value, trial, scenario order)
};

/// Mean and standard error over feasible trials; NaN when none is feasible.
inline SweepRow summarize(const std::string& param, double value, Scenario s, const std::vector<TrialResult>& rs) {
    SweepRow row{param, value, s};
    row.trials = static_cast<int>(rs.size());
    std::vector<double> e;
    for (const auto& r : rs)
        if (r.feasible) e.push_back(r.energy.total);
    row.infeasible_rate = rs.empty() ? 0.0 : 1.0 - static_cast<double>(e.size()) / static_cast<double>(rs.size());
    if (e.empty()) {
        row.mean = row.stderr_ = std::nan("");
        return row;
    }
    double sum = 0.0;
    for (double x : e) sum += x;
    row.mean = sum / static_cast<double>(e.size());
    double ss = 0.0;
    for (double x : e) ss += (x - row.mean) * (x - row.mean);
    row.stderr_ = e.size() > 1 ? std::sqrt(ss / static_cast<double>(e.size() - 1) / static_cast<double>(e.size())) : 0.0;
    return row;
}

inline SweepOutput run_sweep(const SweepSpec& spec) {
    spec.validate();
    const int trials = spec.trials > 0 ? spec.trials : spec.base.trials;
    const int nv = static_cast<int>(spec.values.size()), ns = static_cast<int>(spec.scenarios.size());
    std::vector<std::vector<TrialResult>> grid(static_cast<std::size_t>(nv * trials));
    std::vector<SystemConfig> cfgs;
    for (double v : spec.values) {
        SystemConfig c = spec.base;
        set_param(c, spec.param, starfl::detail::fmt(v));
        c.validate();
        cfgs.push_back(c);
    }
    parallel_for(nv * trials, worker_count(spec.base), [&](int i) {
        grid[i] = run_trial(cfgs[i / trials], i % trials, spec.scenarios);
    });
    SweepOutput out;
    for (int v = 0; v < nv; ++v) {
        for (int t = 0; t < trials; ++t)
            for (const auto& r : grid[v * trials + t]) out.records.push_back({spec.values[v], r});
        for (int s = 0; s < ns; ++s) {
            std::vector<TrialResult> rs;
            for (int t = 0; t < trials; ++t) rs.push_back(grid[v * trials + t][s]);
            out.rows.push_back(summarize(spec.param, spec.values[v], spec.scenarios[s], rs));
        }
    }
    return out;
}

inline constexpr const char* kCsvHeader = "param,value,scenario,mean_energy_J,stderr_J,infeasible_rate,trials";

inline void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << kCsvHeader << '\n' << std::setprecision(17);
    for (const auto& r : rows)
        os << r.param << ',' << r.value << ',' << to_string(r.scenario) << ',' << r.mean << ',' << r.stderr_ << ','
           << r.infeasible_rate << ',' << r.trials << '\n';
}

inline nlohmann::json plan_json(const alloc::ResourcePlan& p) {
    auto vec = [](const RVec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json j{{"P_e", p.P_e}, {"tau_e", p.tau_e}, {"tau_l", vec(p.tau_l)}, {"f", vec(p.f)},
                     {"tau_u", vec(p.tau_u)}, {"p_u", vec(p.p_u)}, {"downlink_mode", to_string(p.down.mode)}};
    if (p.down.mode == Mode::TS) {
        j["P_d"] = {p.down.P_side[0], p.down.P_side[1]};
        j["tau_d"] = {p.down.tau_side[0], p.down.tau_side[1]};
    } else {
        j["P_d"] = p.down.P;
        j["tau_d"] = p.down.tau;
    }
    return j;
}

/// One object per trial record; infeasible records carry no energy or plan.
inline nlohmann::json trial_json(const TrialResult& r) {
    nlohmann::json j{{"scenario", to_string(r.scenario)}, {"seed", r.seed},
                     {"trial", r.trial},                  {"feasible", r.feasible},
                     {"bcd_iterations", r.bcd_iterations}, {"wall_s", r.wall_s}};
    if (r.feasible) {
        const auto& e = r.energy;
        j["energy"] = {{"harvest_J", e.harvest},
                       {"downlink_J", e.downlink},
                       {"total_J", e.total},
                       {"user_consumed_J", std::vector<double>(e.user_consumed.data(),
                                                               e.user_consumed.data() + e.user_consumed.size())}};
        j["plan"] = plan_json(r.plan);
    } else {
        j["reason"] = r.reason;
    }
    return j;
}

inline nlohmann::json records_json(const std::string& param, const std::vector<SweepRecord>& recs) {
    auto arr = nlohmann::json::array();
    for (const auto& r : recs) {
        auto j = trial_json(r.result);
        j["param"] = param;
        j["value"] = r.value;
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace starfl::sim

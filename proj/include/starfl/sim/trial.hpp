#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "starfl/alloc/allocate.hpp"

namespace starfl::sim {

using alloc::Allocation;
using alloc::Workload;
using beam::GainSummary;
using beam::PhaseResult;

/// Independent RNG stream for (master seed, trial, tag). Streams never depend
/// on which scenarios run, so any subset of scenarios reproduces the same draws.
inline std::mt19937_64 stream(std::uint64_t seed, int trial, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), tag};
    return std::mt19937_64(seq);
}

enum Tag : std::uint32_t { kTopology = 1, kChannels, kWorkload, kPhaseBase = 16 };

/// One Monte-Carlo draw plus its phase optimizations, computed on first use.
/// Eight optimizations cover every scenario: energy (ES, CONV), uplink and
/// downlink (ES, TS, CONV).
class TrialInstance {
public:
    TrialInstance(const SystemConfig& c, int trial) : cfg_(c), trial_(trial) {
        auto r1 = stream(c.seed, trial, kTopology);
        topo_ = generate_topology(c, r1);
        auto r2 = stream(c.seed, trial, kChannels);
        cs_ = sample_channels(topo_, c, r2);
        auto r3 = stream(c.seed, trial, kWorkload);
        w_ = alloc::draw_workload(c, r3);
        beta_ = fairness_targets(topo_);
        sigma2_ = noise_power(c);
    }

    const SystemConfig& cfg() const { return cfg_; }
    int trial() const { return trial_; }
    const Topology& topology() const { return topo_; }
    const ChannelSet& channels() const { return cs_; }
    const Workload& workload() const { return w_; }
    const RMat& beta() const { return beta_; }

    const PhaseResult& phase(Phase ph, Mode m) {
        const auto key = std::pair{ph, m};
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        auto rng = stream(cfg_.seed, trial_, kPhaseBase + 4 * static_cast<std::uint32_t>(ph) + static_cast<std::uint32_t>(m));
        PhaseResult r;
        switch (ph) {
            case Phase::e: r = beam::optimize_energy_phase(cs_[Phase::e], beta_, cfg_, rng, m); break;
            case Phase::u: r = beam::optimize_uplink(cs_[Phase::u], beta_, cfg_, m, rng); break;
            default: r = beam::optimize_downlink(cs_[Phase::d], beta_, cfg_, m, sigma2_, rng); break;
        }
        return cache_.emplace(key, std::move(r)).first->second;
    }

    /// Energy transfer always uses ES, or the conventional layout for CONV.
    GainSummary gains(Scenario s) {
        const Mode me = s == Scenario::CONV ? Mode::CONV : Mode::ES;
        return beam::summarize_gains(cs_, phase(Phase::e, me), phase(Phase::u, uplink_mode(s)),
                                     phase(Phase::d, downlink_mode(s)), sigma2_);
    }

    /// Largest BCD iteration count over the three phases of a scenario.
    int bcd_iterations(Scenario s) {
        const Mode me = s == Scenario::CONV ? Mode::CONV : Mode::ES;
        return std::max({phase(Phase::e, me).iterations, phase(Phase::u, uplink_mode(s)).iterations,
                         phase(Phase::d, downlink_mode(s)).iterations});
    }

private:
    SystemConfig cfg_;
    int trial_;
    Topology topo_;
    ChannelSet cs_;
    Workload w_;
    RMat beta_;
    double sigma2_ = 1.0;
    std::map<std::pair<Phase, Mode>, PhaseResult> cache_;
};

struct TrialResult {
    Scenario scenario = Scenario::ES_ES;
    std::uint64_t seed = 0;
    int trial = 0;
    bool feasible = false;
    std::string reason;
    alloc::ResourcePlan plan;
    alloc::EnergyBreakdown energy;
    int bcd_iterations = 0;
    double wall_s = 0.0;  // allocation plus this scenario's share of uncached phase work
};

inline TrialResult run_scenario(TrialInstance& in, Scenario s) {
    const auto t0 = std::chrono::steady_clock::now();
    TrialResult r;
    r.scenario = s;
    r.seed = in.cfg().seed;
    r.trial = in.trial();
    const auto g = in.gains(s);
    r.bcd_iterations = in.bcd_iterations(s);
    const auto a = alloc::allocate(g, in.workload(), s, in.cfg());
    r.feasible = a.feasible;
    r.reason = a.reason;
    if (a.feasible) {
        r.plan = a.plan;
        r.energy = a.energy;
    }
    r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

/// All requested scenarios on one shared draw (paired comparison).
inline std::vector<TrialResult> run_trial(const SystemConfig& c, int trial, const std::vector<Scenario>& scenarios) {
    TrialInstance in(c, trial);
    std::vector<TrialResult> out;
    for (Scenario s : scenarios) out.push_back(run_scenario(in, s));
    return out;
}

inline TrialResult run_trial(const SystemConfig& c, Scenario s, int trial) { return run_trial(c, trial, {s}).front(); }

}  // namespace starfl::sim

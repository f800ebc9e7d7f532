#pragma once

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "starfl/alloc/uplink.hpp"

namespace starfl::alloc {

/// Downlink part of a plan. ES uses P (power) and tau; TS uses the per-side
/// pair, indexed by Side.
struct DownlinkPlan {
    Mode mode = Mode::ES;
    double P = 0.0, tau = 0.0;
    double P_side[2] = {0.0, 0.0};
    double tau_side[2] = {0.0, 0.0};

    double energy() const {
        return mode == Mode::TS ? P_side[0] * tau_side[0] + P_side[1] * tau_side[1] : P * tau;
    }
    double time() const { return mode == Mode::TS ? tau_side[0] + tau_side[1] : tau; }
};

struct ResourcePlan {
    Scenario scenario = Scenario::ES_ES;
    double P_e = 0.0;
    double tau_e = 0.0;
    RVec tau_l, f, tau_u, p_u;
    DownlinkPlan down;
};

struct EnergyBreakdown {
    double harvest = 0.0;   // P_e tau_e
    double downlink = 0.0;  // AP energy in the downlink
    double total = 0.0;
    RVec user_consumed;     // p_u tau_u + a f^3 tau_l per user
};

inline EnergyBreakdown total_energy(const ResourcePlan& p, const SystemConfig& c) {
    EnergyBreakdown e;
    e.harvest = p.P_e * p.tau_e;
    e.downlink = p.down.energy();
    e.total = e.harvest + e.downlink;
    e.user_consumed = RVec(p.tau_l.size());
    for (Eigen::Index k = 0; k < p.tau_l.size(); ++k)
        e.user_consumed(k) = p.p_u(k) * p.tau_u(k) + c.a * std::pow(p.f(k), 3) * p.tau_l(k);
    return e;
}

/// Local time and CPU frequency that spend exactly the residual harvest
/// H_k = eta P z_e tau_e - p_u tau_u on L_local bits. Throws Infeasible when
/// nothing is left or the resulting time breaks tau_l >= tau_e or the window.
inline std::pair<double, double> local_schedule_one(double H, double L_local, double tau_e, double window,
                                                    const SystemConfig& c) {
    if (!(H > 0)) throw Infeasible("local schedule: harvested energy exhausted by the uplink");
    const double cycles = L_local * c.C_k;
    const double tau_l = std::sqrt(c.a * cycles * cycles * cycles / H);
    if (tau_l < tau_e * (1 - 1e-12)) throw Infeasible("local schedule: local time shorter than harvest time");
    if (tau_l > window * (1 + 1e-12)) throw Infeasible("local schedule: local time exceeds the delay window");
    return {tau_l, cycles / tau_l};
}

/// Vector form. `window[k]` is the time left for local processing of user k.
inline std::pair<RVec, RVec> local_schedule(double tau_e, const RVec& p_u, const RVec& tau_u, const GainSummary& g,
                                            const Workload& w, const RVec& window, double P_e,
                                            const SystemConfig& c) {
    require(tau_e > 0, "local_schedule: tau_e must be positive");
    const auto K = p_u.size();
    RVec tl(K), f(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double H = c.eta * P_e * g.z_e(k) * tau_e - p_u(k) * tau_u(k);
        std::tie(tl(k), f(k)) = local_schedule_one(H, w.L_local(k), tau_e, window(k), c);
    }
    return {tl, f};
}

/// Every ResourcePlan invariant; returns a description of each violation.
inline std::vector<std::string> check_plan(const ResourcePlan& p, const GainSummary& g, const Workload& w,
                                           const SystemConfig& c) {
    std::vector<std::string> bad;
    auto fail = [&](const std::string& what, int k = -1) {
        bad.push_back(k >= 0 ? what + " (user " + std::to_string(k) + ")" : what);
    };
    const int K = static_cast<int>(g.z_e.size());
    const Mode up = uplink_mode(p.scenario);
    const bool ts_up = up == Mode::TS;
    if (p.P_e > c.P_max * (1 + 1e-12) || !(p.P_e > 0)) fail("P_e outside (0, P_max]");
    if (!(p.tau_e > 0)) fail("tau_e not positive");
    RVec rates(K);
    for (int k = 0; k < K; ++k) rates(k) = uplink_rate(k, p.p_u, g, up, c);
    double longest = 0.0;
    for (int k = 0; k < K; ++k) {
        const double harvested = c.eta * p.P_e * g.z_e(k) * p.tau_e;
        const double used = p.p_u(k) * p.tau_u(k) + c.a * std::pow(p.f(k), 3) * p.tau_l(k);
        // A user pinned at tau_l = tau_e may hold a surplus it cannot spend.
        const bool pinned = std::abs(p.tau_l(k) - p.tau_e) <= 1e-12 * p.tau_e;
        if (used > harvested * (1 + 1e-6) || (!pinned && harvested - used > 1e-6 * harvested))
            fail("energy budget not tight", k);
        if (p.tau_l(k) < p.tau_e * (1 - 1e-12)) fail("tau_l < tau_e", k);
        if (p.p_u(k) < 0 || p.p_u(k) > c.p_max * (1 + 1e-12)) fail("uplink power outside [0, p_max]", k);
        if (std::abs(p.f(k) * p.tau_l(k) / c.C_k - w.L_local(k)) > 1e-9 * w.L_local(k)) fail("local workload", k);
        if (std::abs(rates(k) * p.tau_u(k) - w.L_up(k)) > 1e-6 * w.L_up(k)) fail("uplink workload", k);
        // Both TS slots run back to back; each user waits through the other.
        const double uplink_time = ts_up ? 2 * p.tau_u(k) : p.tau_u(k);
        const double t = p.tau_l(k) + uplink_time + p.down.time();
        if (t > c.T + c.eps) fail("delay limit exceeded", k);
        if (!ts_up && std::abs(t - c.T) > c.eps) fail("delay not tight", k);
        longest = std::max(longest, t);
        if (ts_up && std::abs(p.tau_u(k) - p.tau_u(0)) > 1e-12 * p.tau_u(0)) fail("TS uplink slots differ", k);
    }
    if (ts_up && std::abs(longest - c.T) > c.eps) fail("delay not tight");
    const auto& d = p.down;
    if (d.mode == Mode::TS) {
        if (d.P_side[0] + d.P_side[1] > c.P_max * (1 + 1e-12)) fail("downlink power cap");
        const double zw[2] = {g.z_worst_t, g.z_worst_r};
        for (int s = 0; s < 2; ++s)
            if (std::abs(c.B * std::log2(1 + d.P_side[s] * zw[s]) * d.tau_side[s] - w.L_down) > 1e-6 * w.L_down)
                fail("downlink workload");
    } else {
        if (d.P > c.P_max * (1 + 1e-12)) fail("downlink power cap");
        if (std::abs(c.B * std::log2(1 + d.P * g.z_worst) * d.tau - w.L_down) > 1e-6 * w.L_down)
            fail("downlink workload");
    }
    return bad;
}

/// One `name = value  # unit` line per field.
inline std::string serialize_plan(const ResourcePlan& p, const SystemConfig& c) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "scenario = " << to_string(p.scenario) << '\n';
    os << "P_e = " << p.P_e << "  # W\n";
    os << "tau_e = " << p.tau_e << "  # s\n";
    auto vec = [&](const char* name, const RVec& v, const char* unit) {
        for (Eigen::Index k = 0; k < v.size(); ++k) os << name << '[' << k << "] = " << v(k) << "  # " << unit << '\n';
    };
    vec("tau_l", p.tau_l, "s");
    vec("f", p.f, "Hz");
    vec("tau_u", p.tau_u, "s");
    vec("p_u", p.p_u, "W");
    if (p.down.mode == Mode::TS) {
        os << "P_d_t = " << p.down.P_side[0] << "  # W\n";
        os << "P_d_r = " << p.down.P_side[1] << "  # W\n";
        os << "tau_d_t = " << p.down.tau_side[0] << "  # s\n";
        os << "tau_d_r = " << p.down.tau_side[1] << "  # s\n";
    } else {
        os << "P_d = " << p.down.P << "  # W\n";
        os << "tau_d = " << p.down.tau << "  # s\n";
    }
    const auto e = total_energy(p, c);
    os << "E_harvest = " << e.harvest << "  # J\n";
    os << "E_downlink = " << e.downlink << "  # J\n";
    os << "E_total = " << e.total << "  # J\n";
    return os.str();
}

}  // namespace starfl::alloc

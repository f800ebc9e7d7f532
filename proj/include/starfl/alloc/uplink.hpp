#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "starfl/beam/optimize.hpp"
#include "starfl/channel/channel.hpp"
#include "starfl/kernel/search.hpp"

namespace starfl::alloc {

using beam::GainSummary;

/// Per-user data sizes for one round, in bits.
struct Workload {
    RVec L_local;
    RVec L_up;
    double L_down = 0.0;
};

template <typename Rng>
Workload draw_workload(const SystemConfig& c, Rng& rng) {
    std::uniform_real_distribution<double> loc(c.L_local_min, c.L_local_max), up(c.L_up_min, c.L_up_max);
    Workload w;
    w.L_local = RVec(c.K());
    w.L_up = RVec(c.K());
    for (int k = 0; k < c.K(); ++k) {
        w.L_local(k) = c.L_local_min == c.L_local_max ? c.L_local_min : loc(rng);
        w.L_up(k) = c.L_up_min == c.L_up_max ? c.L_up_min : up(rng);
    }
    w.L_down = c.L_down;
    return w;
}

/// SIC decoding order: descending uplink gain, ties by index.
inline std::vector<int> decoding_order(const GainSummary& g) {
    std::vector<int> o(static_cast<std::size_t>(g.z_u.size()));
    std::iota(o.begin(), o.end(), 0);
    std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return g.z_u(a) > g.z_u(b); });
    return o;
}

/// Users whose signal is still present when k is decoded. ES and the
/// conventional RIS: later-decoded users of k's group plus every user of the
/// other group. TS: later-decoded users of k's group only.
inline std::vector<int> interferers(const GainSummary& g, int k, Mode mode) {
    const auto order = decoding_order(g);
    const auto pos = [&](int u) { return std::find(order.begin(), order.end(), u) - order.begin(); };
    std::vector<int> out;
    for (int m = 0; m < static_cast<int>(g.group.size()); ++m) {
        if (m == k) continue;
        const bool same = g.group[m] == g.group[k];
        if (same ? pos(m) > pos(k) : mode != Mode::TS) out.push_back(m);
    }
    return out;
}

/// Received interference-plus-noise power in user k's combiner output.
inline double interference_plus_noise(int k, const RVec& p, const GainSummary& g, Mode mode, double noise) {
    double j = noise * g.v_norm2(k);
    for (int m : interferers(g, k, mode)) j += p(m) * g.cross(m, k);
    return j;
}

/// Uplink rate in bits/s.
inline double uplink_rate(int k, const RVec& p, const GainSummary& g, Mode mode, const SystemConfig& c) {
    require(p.minCoeff() >= 0, "uplink_rate: powers must be nonnegative");
    return c.B * std::log2(1.0 + p(k) * g.z_u(k) / interference_plus_noise(k, p, g, mode, noise_power(c)));
}

inline double sinr_target(double rate, double B) { return std::exp2(rate / B) - 1.0; }

/// Powers meeting the given SINR targets exactly. TS is triangular in the
/// decoding order and is back-substituted; otherwise one dense system.
/// Throws Infeasible for negative or capped-out solutions.
inline RVec solve_for_sinr(const RVec& gamma, const GainSummary& g, Mode mode, const SystemConfig& c) {
    const int K = static_cast<int>(gamma.size());
    const double noise = noise_power(c);
    RVec p = RVec::Zero(K);
    if (mode == Mode::TS) {
        const auto order = decoding_order(g);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const int k = *it;
            p(k) = gamma(k) * interference_plus_noise(k, p, g, mode, noise) / g.z_u(k);
        }
    } else {
        RMat A = RMat::Zero(K, K);
        RVec b(K);
        for (int k = 0; k < K; ++k) {
            A(k, k) = g.z_u(k);
            for (int m : interferers(g, k, mode)) A(k, m) = -gamma(k) * g.cross(m, k);
            b(k) = gamma(k) * noise * g.v_norm2(k);
        }
        try {
            p = kernel::solve_dense_linear(A, b);
        } catch (const NumericError&) {
            throw Infeasible("uplink powers: singular interference system");
        }
    }
    if (!(p.minCoeff() >= 0)) throw Infeasible("uplink powers: rates not jointly achievable");
    if (p.maxCoeff() > c.p_max * (1 + 1e-12)) throw Infeasible("uplink powers: cap p_max exceeded");
    return p;
}

inline RVec solve_uplink_powers(const RVec& target_rates, const GainSummary& g, Mode mode, const SystemConfig& c) {
    require(target_rates.size() == g.z_u.size(), "solve_uplink_powers: size mismatch");
    require(target_rates.minCoeff() > 0, "solve_uplink_powers: target rates must be positive");
    RVec gamma(target_rates.size());
    for (Eigen::Index k = 0; k < gamma.size(); ++k) gamma(k) = sinr_target(target_rates(k), c.B);
    return solve_for_sinr(gamma, g, mode, c);
}

}  // namespace starfl::alloc

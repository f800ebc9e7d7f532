#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "starfl/config.hpp"
#include "starfl/kernel/search.hpp"

namespace starfl::alloc {

struct DownlinkEs {
    double P = 0.0;
    double tau = 0.0;
};

struct DownlinkTs {
    double P_t = 0.0, P_r = 0.0;
    double tau_t = 0.0, tau_r = 0.0;
    double energy() const { return P_t * tau_t + P_r * tau_r; }
};

/// Time to push `bits` at power P over a noise-normalized gain z.
inline double downlink_time(double bits, double P, double z, double B) {
    const double r = B * std::log2(1.0 + P * z);
    return r > 0 ? bits / r : std::numeric_limits<double>::infinity();
}

namespace detail {

// Smallest power in (0, cap] whose downlink time fits in t_rem.
inline double min_power(double z, double t_rem, double cap, double bits, const SystemConfig& c) {
    if (!(t_rem > 0) || downlink_time(bits, cap, z, c.B) > t_rem) throw Infeasible("downlink: power cap too low");
    return kernel::bisect_predicate([&](double P) { return downlink_time(bits, P, z, c.B) <= t_rem; }, 0.0, cap,
                                    1e-10 * c.P_max);
}

}  // namespace detail

/// Minimal power meeting the time budget; energy P L / (B log2(1 + P z))
/// increases with P, so this is also the minimal-energy point.
inline DownlinkEs downlink_es(double z_worst, double t_rem, const SystemConfig& c, double bits = -1) {
    require(t_rem > 0, "downlink_es: remaining time must be positive");
    require(z_worst > 0, "downlink_es: gain must be positive");
    if (bits < 0) bits = c.L_down;
    DownlinkEs d;
    d.P = detail::min_power(z_worst, t_rem, c.P_max, bits, c);
    d.tau = downlink_time(bits, d.P, z_worst, c.B);
    return d;
}

/// Two back-to-back slots sharing t_rem and the power budget. The stronger
/// side's power P_a runs over the grid eps * P_max; for each, the weaker side
/// takes the smallest power fitting the leftover time.
inline DownlinkTs downlink_ts(double z_t, double z_r, double t_rem, const SystemConfig& c, double bits = -1) {
    require(t_rem > 0, "downlink_ts: remaining time must be positive");
    require(z_t > 0 && z_r > 0, "downlink_ts: gains must be positive");
    if (bits < 0) bits = c.L_down;
    const bool swapped = z_r > z_t;
    const double za = swapped ? z_r : z_t, zb = swapped ? z_t : z_r;
    const double step = c.eps * c.P_max;
    const auto count = static_cast<long long>(std::floor(c.P_max / step * (1 + 1e-12)));

    auto energy_at = [&](long long i, double* pb = nullptr) {
        const double pa = static_cast<double>(i) * step;
        const double ta = downlink_time(bits, pa, za, c.B);
        const double left = t_rem - ta;
        if (!(left > 0) || pa >= c.P_max) return std::numeric_limits<double>::infinity();
        try {
            const double p = detail::min_power(zb, left, c.P_max - pa, bits, c);
            if (pb) *pb = p;
            return pa * ta + p * downlink_time(bits, p, zb, c.B);
        } catch (const Infeasible&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    // First grid power whose own slot fits; lower ones are infeasible.
    long long lo = 0;
    try {
        lo = std::llround(kernel::grid_search_monotone(
                              [&](double P) { return downlink_time(bits, P, za, c.B) < t_rem; }, step,
                              static_cast<double>(count) * step, step) /
                          step);
    } catch (const Infeasible&) {
        throw Infeasible("downlink_ts: no power split fits the time budget");
    }
    // Coarse scan, then golden section on grid indices around the best.
    const long long n = std::min<long long>(256, count - lo + 1);
    long long best = -1;
    double best_e = std::numeric_limits<double>::infinity();
    std::vector<long long> pts;
    // Log spacing: the optimum often sits a few grid steps above lo.
    lo = std::max<long long>(lo, 1);
    for (long long j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(std::max<long long>(n - 1, 1));
        const auto i = std::llround(static_cast<double>(lo) * std::pow(static_cast<double>(count) / lo, x));
        if (pts.empty() || i > pts.back()) pts.push_back(std::min(i, count));
    }
    for (long long i : pts) {
        const double e = energy_at(i);
        if (e < best_e) best_e = e, best = i;
    }
    if (best < 0) throw Infeasible("downlink_ts: no power split fits the time budget");
    const auto it = std::find(pts.begin(), pts.end(), best);
    long long a = it == pts.begin() ? lo : *(it - 1);
    long long b = it + 1 == pts.end() ? count : *(it + 1);
    while (b - a > 3) {
        const long long m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
        if (energy_at(m1) <= energy_at(m2)) b = m2;
        else a = m1;
    }
    for (long long i = std::max(lo, a - 2); i <= std::min(count, b + 2); ++i) {
        const double e = energy_at(i);
        if (e < best_e) best_e = e, best = i;
    }
    DownlinkTs d;
    double pb = 0.0;
    energy_at(best, &pb);
    const double pa = static_cast<double>(best) * step;
    (swapped ? d.P_r : d.P_t) = pa;
    (swapped ? d.P_t : d.P_r) = pb;
    (swapped ? d.tau_r : d.tau_t) = downlink_time(bits, pa, za, c.B);
    (swapped ? d.tau_t : d.tau_r) = downlink_time(bits, pb, zb, c.B);
    return d;
}

}  // namespace starfl::alloc

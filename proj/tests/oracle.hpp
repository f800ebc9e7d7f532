#pragma once

// Brute-force reference for tiny instances (one user per group), shared by
// the unit and acceptance tests. Independent of the allocator: it grids the
// time split directly and derives everything else in closed form.

#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "starfl/alloc/plan.hpp"

namespace starfl::oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimizes f over a box by a coarse grid followed by repeated zooms around
// the best point.
template <std::size_t D>
double zoom_min(const std::function<double(const std::array<double, D>&)>& f, std::array<double, D> lo,
                std::array<double, D> hi, int coarse = 28, int fine = 13, int levels = 8) {
    double best = kInf;
    std::array<double, D> arg{};
    for (int lvl = 0; lvl <= levels; ++lvl) {
        const int n = lvl == 0 ? coarse : fine;
        std::array<int, D> idx{};
        while (true) {
            std::array<double, D> x;
            for (std::size_t d = 0; d < D; ++d) x[d] = lo[d] + (hi[d] - lo[d]) * (idx[d] + 0.5) / n;
            const double v = f(x);
            if (v < best) {
                best = v;
                arg = x;
            }
            std::size_t d = 0;
            while (d < D && ++idx[d] == n) idx[d++] = 0;
            if (d == D) break;
        }
        if (best == kInf) return kInf;
        for (std::size_t d = 0; d < D; ++d) {
            const double w = 2.0 * (hi[d] - lo[d]) / n;
            lo[d] = std::max(lo[d], arg[d] - w);
            hi[d] = std::min(hi[d], arg[d] + w);
        }
    }
    return best;
}

// Harvest energy for fixed uplink powers, times and local windows: the
// smallest tau_e with every budget met and tau_e <= tau_l. The objective is
// the continuous relaxation; the allocator rounds tau_e up to the eps grid.
inline double harvest_energy(const beam::GainSummary& g, const alloc::Workload& w, const SystemConfig& c,
                             const double p[2], const double tu[2], const double tl[2]) {
    double te = 0.0;
    for (int k = 0; k < 2; ++k) {
        if (!(tl[k] > 0) || !(p[k] >= 0) || p[k] > c.p_max) return kInf;
        const double cyc = w.L_local(k) * c.C_k;
        const double need = p[k] * tu[k] + c.a * cyc * cyc * cyc / (tl[k] * tl[k]);
        te = std::max(te, need / (c.eta * c.P_max * g.z_e(k)));
    }
    for (int k = 0; k < 2; ++k)
        if (te > tl[k]) return kInf;
    return c.P_max * te;
}

inline double down_power(double bits, double t, double z, const SystemConfig& c) {
    return std::expm1(bits / (c.B * t) * std::log(2.0)) / z;
}

/// Minimum energy for ES-ES or TS-TS with users 0 and 1 in different groups.
inline double brute_force(const beam::GainSummary& g, const alloc::Workload& w, Scenario s, const SystemConfig& c) {
    const double n = noise_power(c), T = c.T, bits = w.L_down;
    auto gamma = [&](int k, double t) { return std::expm1(w.L_up(k) / (c.B * t) * std::log(2.0)); };
    if (s == Scenario::ES_ES) {
        // Each user sees the other in full: a 2x2 linear system.
        auto f = [&](const std::array<double, 3>& x) {
            const double tu[2] = {x[0], x[1]}, td = x[2];
            const double Pd = down_power(bits, td, g.z_worst, c);
            if (!(Pd <= c.P_max)) return kInf;
            const double g0 = gamma(0, tu[0]), g1 = gamma(1, tu[1]);
            const double a00 = g.z_u(0), a01 = -g0 * g.cross(1, 0), b0 = g0 * n * g.v_norm2(0);
            const double a10 = -g1 * g.cross(0, 1), a11 = g.z_u(1), b1 = g1 * n * g.v_norm2(1);
            const double det = a00 * a11 - a01 * a10;
            if (!(det > 0)) return kInf;
            const double p[2] = {(b0 * a11 - a01 * b1) / det, (a00 * b1 - a10 * b0) / det};
            const double tl[2] = {T - tu[0] - td, T - tu[1] - td};
            return harvest_energy(g, w, c, p, tu, tl) + Pd * td;
        };
        return zoom_min<3>(f, {0, 0, 0}, {T, T, T});
    }
    require(s == Scenario::TS_TS, "brute_force: ES-ES or TS-TS only");
    auto f = [&](const std::array<double, 3>& x) {
        const double t = x[0], tt = x[1], tr = x[2];
        const double Pt = down_power(bits, tt, g.z_worst_t, c), Pr = down_power(bits, tr, g.z_worst_r, c);
        if (!(Pt + Pr <= c.P_max)) return kInf;
        const double tu[2] = {t, t};
        const double p[2] = {gamma(0, t) * n * g.v_norm2(0) / g.z_u(0), gamma(1, t) * n * g.v_norm2(1) / g.z_u(1)};
        const double win = T - 2 * t - tt - tr;
        const double tl[2] = {win, win};
        return harvest_energy(g, w, c, p, tu, tl) + Pt * tt + Pr * tr;
    };
    return zoom_min<3>(f, {0, 0, 0}, {T / 2, T, T});
}

}  // namespace starfl::oracle

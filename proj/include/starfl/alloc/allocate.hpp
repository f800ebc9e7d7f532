#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "starfl/alloc/downlink.hpp"
#include "starfl/alloc/plan.hpp"

namespace starfl::alloc {

enum class ScanOrder { Ascending, Descending };

struct AllocOptions {
    ScanOrder scan = ScanOrder::Ascending;
    double P_e = 0.0;       // <= 0 means P_max
    int outer_points = 24;  // coarse grid over the downlink time
};

struct Allocation {
    bool feasible = false;
    std::string reason;
    ResourcePlan plan;
    EnergyBreakdown energy;
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Largest x in [lo, hi] with f(x) <= 0 for convex f; nullopt if none.
inline std::optional<double> largest_root(const std::function<double(double)>& f, double lo, double hi) {
    if (lo > hi) return std::nullopt;
    if (f(hi) <= 0) return hi;
    const double xm = kernel::golden_min(f, lo, hi, 1e-11 * std::max(hi - lo, 1e-300));
    double a = xm;
    if (f(a) > 0) {
        if (f(lo) <= 0) a = lo;
        else return std::nullopt;
    }
    double b = hi;
    for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
        const double m = 0.5 * (a + b);
        if (f(m) <= 0) a = m;
        else b = m;
    }
    return a;
}

/// Static per-call data of the uplink.
struct Uplink {
    Mode mode = Mode::ES;
    std::vector<std::vector<int>> interf;
    std::vector<int> order;
    RVec noise;  // sigma^2 ||v_k||^2
    RVec A;      // a (L_local C_k)^3
    RVec bits;   // L_up / B
};

inline Uplink make_uplink(const GainSummary& g, const Workload& w, const SystemConfig& c, Mode mode) {
    Uplink u;
    const int K = static_cast<int>(g.z_u.size());
    u.mode = mode;
    u.order = decoding_order(g);
    u.noise = RVec(K);
    u.A = RVec(K);
    u.bits = RVec(K);
    for (int k = 0; k < K; ++k) {
        u.interf.push_back(interferers(g, k, mode));
        u.noise(k) = noise_power(c) * g.v_norm2(k);
        const double cyc = w.L_local(k) * c.C_k;
        u.A(k) = c.a * cyc * cyc * cyc;
        u.bits(k) = w.L_up(k) / c.B;
    }
    return u;
}

/// Outcome of the harvest/local/uplink block for a fixed window and tau_e.
struct Inner {
    bool ok = false;
    std::string why;
    RVec tau_u, p, tau_l, f;
};

// Per-user times from the largest root of the budget equality, with
// interference settled by Gauss-Seidel sweeps (ES and conventional RIS).
inline Inner es_inner(const GainSummary& g, const Uplink& u, const RVec& H, double W, double tau_e, bool enforce,
                      const SystemConfig& c) {
    const int K = static_cast<int>(H.size());
    Inner r;
    r.tau_u = RVec::Zero(K);
    r.p = RVec::Zero(K);
    std::vector<bool> pinned(static_cast<std::size_t>(K), false);
    const double hi = enforce ? W - tau_e : W * (1 - 1e-12);
    bool settled = false;
    for (int it = 0; it < 500 && !settled; ++it) {
        double change = 0.0;
        for (int k : u.order) {
            double I = u.noise(k);
            for (int m : u.interf[k]) I += r.p(m) * g.cross(m, k);
            const double cz = I / g.z_u(k);
            const double b = u.bits(k);
            const double tmin = b / std::log2(1.0 + c.p_max / cz);
            if (!(tmin <= hi)) {
                r.why = "uplink power cap";
                return r;
            }
            auto F = [&](double t) { return u.A(k) / ((W - t) * (W - t)) + cz * std::expm1(b / t * M_LN2) * t - H(k); };
            double t;
            if (enforce && F(hi) <= 0) {
                t = hi;
                pinned[k] = true;
            } else {
                const auto root = largest_root(F, tmin, hi);
                if (!root) {
                    r.why = "harvested energy too small";
                    return r;
                }
                t = *root;
                pinned[k] = false;
            }
            const double p = cz * std::expm1(b / t * M_LN2);
            change = std::max({change, std::abs(t - r.tau_u(k)) / W, std::abs(p - r.p(k)) / std::max(p, 1e-300)});
            r.tau_u(k) = t;
            r.p(k) = p;
        }
        settled = change <= 1e-12;
    }
    if (!settled) {
        r.why = "uplink interference did not settle";
        return r;
    }
    if (!enforce) {
        r.ok = true;
        return r;
    }
    RVec gamma(K);
    for (int k = 0; k < K; ++k) gamma(k) = std::expm1(u.bits(k) / r.tau_u(k) * M_LN2);
    try {
        r.p = solve_for_sinr(gamma, g, u.mode, c);
    } catch (const Infeasible& e) {
        r.why = e.what();
        return r;
    }
    r.tau_l = RVec(K);
    r.f = RVec(K);
    for (int k = 0; k < K; ++k) {
        const double left = H(k) - r.p(k) * r.tau_u(k);
        const double tl = pinned[k] ? tau_e : std::sqrt(u.A(k) / left);
        if (!(left > 0) || u.A(k) / (tl * tl) > left * (1 + 1e-9)) {
            r.why = "harvested energy too small";
            return r;
        }
        if (tl < tau_e * (1 - 1e-12)) {
            r.why = "local time shorter than harvest time";
            return r;
        }
        r.tau_l(k) = tl;
        r.f(k) = std::cbrt(u.A(k) / c.a) / tl;
    }
    r.ok = true;
    return r;
}

// TS uplink: one slot length for both groups, each group decoded on its own.
inline RVec ts_powers(const GainSummary& g, const Uplink& u, double t) {
    RVec p = RVec::Zero(g.z_u.size());
    for (auto it = u.order.rbegin(); it != u.order.rend(); ++it) {
        const int k = *it;
        double I = u.noise(k);
        for (int m : u.interf[k]) I += p(m) * g.cross(m, k);
        p(k) = std::expm1(u.bits(k) / t * M_LN2) * I / g.z_u(k);
    }
    return p;
}

inline Inner ts_inner(const GainSummary& g, const Uplink& u, const RVec& H, double W, double tau_e, bool enforce,
                      const SystemConfig& c) {
    const int K = static_cast<int>(H.size());
    Inner r;
    const double hi = enforce ? 0.5 * (W - tau_e) : 0.5 * W * (1 - 1e-12);
    if (!(hi > 0) || ts_powers(g, u, hi).maxCoeff() > c.p_max) {
        r.why = "uplink power cap";
        return r;
    }
    const double tmin =
        kernel::bisect_predicate([&](double t) { return ts_powers(g, u, t).maxCoeff() <= c.p_max; }, 1e-12 * hi, hi,
                                 1e-13 * hi);
    auto h = [&](double t) {
        const RVec p = ts_powers(g, u, t);
        const double lam = W - 2 * t;
        double worst = -kInf;
        for (int k = 0; k < K; ++k) worst = std::max(worst, (p(k) * t + u.A(k) / (lam * lam) - H(k)) / H(k));
        return worst;
    };
    double t;
    if (enforce && h(hi) <= 0) {
        t = hi;
    } else {
        const auto root = largest_root(h, tmin, hi);
        if (!root) {
            r.why = "harvested energy too small";
            return r;
        }
        t = *root;
    }
    r.tau_u = RVec::Constant(K, t);
    r.p = ts_powers(g, u, t);
    if (!enforce) {
        r.ok = true;
        return r;
    }
    r.tau_l = RVec(K);
    r.f = RVec(K);
    for (int k = 0; k < K; ++k) {
        const double left = H(k) - r.p(k) * t;
        if (!(left > 0)) {
            r.why = "harvested energy too small";
            return r;
        }
        // Users with spare energy finish local work early; never before tau_e.
        const double tl = std::max(std::min(std::sqrt(u.A(k) / left), W - 2 * t), tau_e);
        if (u.A(k) / (tl * tl) > left * (1 + 1e-9)) {
            r.why = "harvested energy too small";
            return r;
        }
        r.tau_l(k) = tl;
        r.f(k) = std::cbrt(u.A(k) / c.a) / tl;
    }
    r.ok = true;
    return r;
}

struct Candidate {
    double energy = kInf;
    ResourcePlan plan;
    std::string why;
};

}  // namespace detail

/// Time, power and CPU allocation for one scenario with the beams fixed.
/// The downlink time is searched in an outer loop; for each value the
/// smallest harvest time on the eps grid is found, and the budget and delay
/// equalities then fix the per-user local and uplink times.
inline Allocation allocate(const GainSummary& g, const Workload& w, Scenario scenario, const SystemConfig& c,
                           const AllocOptions& opt = {}) {
    const int K = static_cast<int>(g.z_e.size());
    require(g.z_u.size() == K && w.L_local.size() == K && w.L_up.size() == K, "allocate: size mismatch");
    const double Pe = opt.P_e > 0 ? opt.P_e : c.P_max;
    require(Pe <= c.P_max * (1 + 1e-12), "allocate: P_e above P_max");
    const Mode up = uplink_mode(scenario), down = downlink_mode(scenario);
    const auto ul = detail::make_uplink(g, w, c, up);
    auto inner = [&](const RVec& H, double W, double te, bool enforce) {
        return up == Mode::TS ? detail::ts_inner(g, ul, H, W, te, enforce, c)
                              : detail::es_inner(g, ul, H, W, te, enforce, c);
    };
    const double bits = w.L_down;

    auto evaluate = [&](double t_down) {
        detail::Candidate cand;
        DownlinkPlan d;
        d.mode = down;
        try {
            if (down == Mode::TS) {
                const auto x = downlink_ts(g.z_worst_t, g.z_worst_r, t_down, c, bits);
                d.P_side[0] = x.P_t;
                d.P_side[1] = x.P_r;
                d.tau_side[0] = x.tau_t;
                d.tau_side[1] = x.tau_r;
            } else {
                const auto x = downlink_es(g.z_worst, t_down, c, bits);
                d.P = x.P;
                d.tau = x.tau;
            }
        } catch (const Infeasible& e) {
            cand.why = e.what();
            return cand;
        }
        const double W = c.T - d.time();
        if (!(W > c.eps)) {
            cand.why = "no time left after the downlink";
            return cand;
        }
        auto harvest = [&](double te) { return RVec(c.eta * Pe * te * g.z_e); };
        double te;
        try {
            te = kernel::grid_search_monotone([&](double x) { return inner(harvest(x), W, x, false).ok; }, c.eps, W,
                                              c.eps, opt.scan == ScanOrder::Descending);
        } catch (const Infeasible&) {
            cand.why = inner(harvest(W), W, W, false).why;
            if (cand.why.empty()) cand.why = "no harvest time fits";
            return cand;
        }
        auto in = inner(harvest(te), W, te, true);
        if (!in.ok) {
            // The relaxed test ignores tau_l >= tau_e. With it, a longer
            // harvest can still fit even though it shortens the uplink window,
            // so scan upward and bisect back to the first feasible grid point.
            constexpr int kScan = 64;
            const double top = std::floor(W / c.eps) * c.eps;
            double prev = te, hit = -1.0;
            for (int i = 1; i <= kScan && hit < 0; ++i) {
                const double x = std::ceil((te + (top - te) * i / kScan) / c.eps - 1e-9) * c.eps;
                if (x <= prev || x > top) continue;
                if (inner(harvest(x), W, x, true).ok) hit = x;
                else prev = x;
            }
            if (hit < 0) {
                cand.why = in.why;
                return cand;
            }
            while (hit - prev > 1.5 * c.eps) {
                const double m = std::round(0.5 * (prev + hit) / c.eps) * c.eps;
                if (inner(harvest(m), W, m, true).ok) hit = m;
                else prev = m;
            }
            te = hit;
            in = inner(harvest(te), W, te, true);
        }
        auto& p = cand.plan;
        p.scenario = scenario;
        p.P_e = Pe;
        p.tau_e = te;
        p.tau_l = in.tau_l;
        p.f = in.f;
        p.tau_u = in.tau_u;
        p.p_u = in.p;
        p.down = d;
        cand.energy = Pe * te + d.energy();
        return cand;
    };

    // Shortest possible downlink: full power on every slot.
    double t_lo = 0.0;
    if (down == Mode::TS) {
        t_lo = downlink_time(bits, c.P_max, g.z_worst_t, c.B) + downlink_time(bits, c.P_max, g.z_worst_r, c.B);
    } else {
        t_lo = downlink_time(bits, c.P_max, g.z_worst, c.B);
    }
    Allocation out;
    if (!(t_lo < c.T)) {
        out.reason = "downlink cannot finish within T";
        return out;
    }
    const double t_hi = c.T * (1 - 1e-9);
    const int n = std::max(opt.outer_points, 3);
    std::vector<double> grid(static_cast<std::size_t>(n));
    std::vector<detail::Candidate> cands(static_cast<std::size_t>(n));
    int best = -1;
    for (int i = 0; i < n; ++i) {
        grid[i] = t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / (n - 1));
        cands[i] = evaluate(grid[i]);
        if (cands[i].energy < detail::kInf && (best < 0 || cands[i].energy < cands[best].energy)) best = i;
    }
    if (best < 0) {
        // Report the first failure past the downlink; the long-downlink end
        // of the grid always fails for lack of time.
        out.reason = cands[0].why.empty() ? "infeasible" : cands[0].why;
        for (const auto& cd : cands)
            if (cd.why.rfind("downlink", 0) != 0) {
                out.reason = cd.why;
                break;
            }
        return out;
    }
    detail::Candidate chosen = cands[best];
    const double a = grid[std::max(best - 1, 0)], b = grid[std::min(best + 1, n - 1)];
    if (b > a) {
        const double x = kernel::golden_min([&](double t) { return evaluate(t).energy; }, a, b, c.eps);
        auto refined = evaluate(x);
        if (refined.energy < chosen.energy) chosen = std::move(refined);
    }
    out.feasible = true;
    out.plan = std::move(chosen.plan);
    out.energy = total_energy(out.plan, c);
    return out;
}

/// Result of re-running allocate with P_e fixed to each grid value.
struct Theorem1Report {
    std::vector<double> P;
    std::vector<bool> feasible;
    std::vector<double> energy;
    std::vector<std::string> violations;
};

inline Theorem1Report verify_theorem1(const GainSummary& g, const Workload& w, Scenario s, const SystemConfig& c,
                                      std::vector<double> grid, double tol = -1) {
    if (tol < 0) tol = 2 * c.eps * c.P_max;
    grid.push_back(c.P_max);
    Theorem1Report r;
    for (double P : grid) {
        require(P > 0 && P <= c.P_max, "verify_theorem1: grid must lie in (0, P_max]");
        AllocOptions o;
        o.P_e = P;
        const auto a = allocate(g, w, s, c, o);
        r.P.push_back(P);
        r.feasible.push_back(a.feasible);
        r.energy.push_back(a.feasible ? a.energy.total : detail::kInf);
    }
    const std::size_t top = r.P.size() - 1;
    for (std::size_t i = 0; i < top; ++i) {
        if (!r.feasible[i]) continue;
        if (!r.feasible[top])
            r.violations.push_back("feasible at P_e = " + std::to_string(r.P[i]) + " W but not at P_max");
        else if (r.energy[top] > r.energy[i] + tol)
            r.violations.push_back("energy at P_max exceeds energy at P_e = " + std::to_string(r.P[i]) + " W");
    }
    return r;
}

}  // namespace starfl::alloc

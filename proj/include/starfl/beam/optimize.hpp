#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "starfl/beam/bcd.hpp"
#include "starfl/kernel/search.hpp"

namespace starfl::beam {

/// Outcome of one phase optimization after rank-1 recovery.
struct PhaseResult {
    PhaseProfile profile;
    CMat V;  // M x K
    RVec z;  // effective gain per user
    std::vector<std::vector<TracePoint>> traces;  // one BCD trace per subproblem
    int iterations = 0;                           // largest BCD iteration count
    bool converged = true;
};

/// Group of each user, read off which side vector is non-zero.
inline std::vector<Side> user_groups(const PhaseChannels& ch) {
    std::vector<Side> g;
    for (std::size_t k = 0; k < ch.g_t.size(); ++k) g.push_back(ch.g_t[k].squaredNorm() > 0 ? Side::t : Side::r);
    return g;
}

/// Column powers that make z_k = beta(k,0) * z_0 exactly for unit beam
/// directions u_k, with ||V||_F^2 = budget. With per_slot set, each group is
/// served in its own slot and only the columns of one group share the budget.
inline CMat rebalance_beams(const PhaseChannels& ch, const PhaseProfile& prof, const std::vector<CVec>& u,
                            const RMat& beta, double budget = 1.0, bool per_slot = false) {
    const int K = static_cast<int>(u.size());
    const auto groups = user_groups(ch);
    std::vector<double> g(static_cast<std::size_t>(K));
    double side[2] = {0.0, 0.0};
    for (int k = 0; k < K; ++k) {
        g[k] = std::norm((cascaded_row(ch, prof, k) * u[k])(0));
        if (!(g[k] > 0)) throw NumericError("rebalance_beams: user has zero cascaded gain");
        side[per_slot && groups[k] == Side::r ? 1 : 0] += beta(k, 0) / g[k];
    }
    const double denom = std::max(side[0], side[1]);
    CMat V(ch.G.cols(), K);
    for (int k = 0; k < K; ++k) V.col(k) = std::sqrt(budget * beta(k, 0) / g[k] / denom) * u[k];
    return V;
}

namespace detail {

inline PhaseProfile project_profile(const Layout& l, const CVec& xi, int N) {
    PhaseProfile p{CVec::Zero(N), CVec::Zero(N), l.mode};
    const auto& it = l.of(Side::t);
    const auto& ir = l.of(Side::r);
    const auto nt = static_cast<Eigen::Index>(it.size());
    auto unit = [](cplx c) { return std::abs(c) > 0 ? c / std::abs(c) : cplx(1.0); };
    if (l.coupled) {
        for (std::size_t i = 0; i < it.size(); ++i) {
            const cplx a = xi(static_cast<Eigen::Index>(i)), b = xi(nt + static_cast<Eigen::Index>(i));
            const double pa = std::norm(a), pb = std::norm(b);
            const double at = pa + pb > 0 ? pa / (pa + pb) : 0.5;
            p.t(it[i]) = std::sqrt(at) * unit(a);
            p.r(ir[i]) = std::sqrt(1.0 - at) * unit(b);
        }
    } else {
        for (std::size_t i = 0; i < it.size(); ++i) p.t(it[i]) = unit(xi(static_cast<Eigen::Index>(i)));
        for (std::size_t i = 0; i < ir.size(); ++i) p.r(ir[i]) = unit(xi(nt + static_cast<Eigen::Index>(i)));
    }
    return p;
}

inline CVec flatten_profile(const Layout& l, const PhaseProfile& p) {
    const auto& it = l.of(Side::t);
    const auto& ir = l.of(Side::r);
    CVec v(static_cast<Eigen::Index>(it.size() + ir.size()));
    for (std::size_t i = 0; i < it.size(); ++i) v(static_cast<Eigen::Index>(i)) = p.t(it[i]);
    for (std::size_t i = 0; i < ir.size(); ++i) v(static_cast<Eigen::Index>(it.size() + i)) = p.r(ir[i]);
    return v;
}

/// Objective reached by a rank-1 profile once beams are matched filters
/// with fairness-restoring powers.
inline double profile_score(Kind kind, const BcdProblem& bp, const PhaseProfile& prof) {
    const int ref = bp.users.front();
    double denom = 0.0, sum_b = 0.0, min_b = std::numeric_limits<double>::infinity();
    for (int k : bp.users) {
        const double g = cascaded_row(*bp.ch, prof, k).squaredNorm();
        if (!(g > 0)) return -std::numeric_limits<double>::infinity();
        denom += bp.beta(k, ref) / g;
        sum_b += bp.beta(k, ref);
        min_b = std::min(min_b, bp.beta(k, ref));
    }
    const double c = bp.budget / denom;
    switch (kind) {
        // Uplink scores the fairness-restored sum too; the plain sum of gains
        // happily starves a whole group.
        case Kind::Energy:
        case Kind::Uplink: return c * sum_b;
        default: return c * min_b / bp.sigma2;
    }
}

/// Coordinate ascent on the per-element amplitude split with phases held,
/// scored by the same closed form as the randomization candidates.
inline void polish_split(Kind kind, const BcdProblem& bp, PhaseProfile& p, int sweeps = 2) {
    double cur = profile_score(kind, bp, p);
    for (int s = 0; s < sweeps; ++s) {
        for (int n : bp.layout.of(Side::t)) {
            const cplx ut = std::abs(p.t(n)) > 0 ? p.t(n) / std::abs(p.t(n)) : cplx(1.0);
            const cplx ur = std::abs(p.r(n)) > 0 ? p.r(n) / std::abs(p.r(n)) : cplx(1.0);
            PhaseProfile q = p;
            auto set = [&](double a) {
                q.t(n) = std::sqrt(a) * ut;
                q.r(n) = std::sqrt(1.0 - a) * ur;
            };
            const double a = kernel::golden_min(
                [&](double x) {
                    set(x);
                    return -profile_score(kind, bp, q);
                },
                0.0, 1.0, 1e-7);
            set(a);
            const double v = profile_score(kind, bp, q);
            if (v > cur) {
                cur = v;
                p = q;
            }
        }
    }
}

/// BCD plus Gaussian randomization for one subproblem. Returns the profile
/// restricted to the layout and unit beam directions for its users.
template <typename Rng>
void solve_subproblem(Kind kind, const BcdProblem& bp, const SystemConfig& cfg, Rng& rng, PhaseProfile& prof,
                      std::vector<CVec>& dirs, PhaseResult& out) {
    const int N = static_cast<int>(bp.ch->G.rows());
    const auto bcd = run_bcd(kind, bp, cfg, rng);
    out.traces.push_back(bcd.trace);
    out.iterations = std::max(out.iterations, bcd.iterations);
    out.converged = out.converged && bcd.converged;

    const auto& it = bp.layout.of(Side::t);
    const auto& ir = bp.layout.of(Side::r);
    const auto nt = static_cast<Eigen::Index>(it.size()), nr = static_cast<Eigen::Index>(ir.size());
    CMat X = CMat::Zero(nt + nr, nt + nr);
    if (nt) X.topLeftCorner(nt, nt) = restrict_to(bcd.phi.of(Side::t), it);
    if (nr) X.bottomRightCorner(nr, nr) = restrict_to(bcd.phi.of(Side::r), ir);
    const auto best = kernel::gaussian_randomize(
        X, cfg.candidates, [&](const CVec& xi) { return flatten_profile(bp.layout, project_profile(bp.layout, xi, N)); },
        [&](const CVec& v) { return profile_score(kind, bp, project_profile(bp.layout, v, N)); }, rng);
    CVec pick = best.vec;
    if (bp.layout.coupled) {
        // Amplitudes from the relaxed diagonals, phases from each block's
        // principal eigenvector. Exact whenever the relaxation is tight.
        CVec xi(nt + nr);
        const auto ut = kernel::hermitian_eig_max(X.topLeftCorner(nt, nt)).u;
        const auto ur = kernel::hermitian_eig_max(X.bottomRightCorner(nr, nr)).u;
        auto ph = [](cplx c) { return std::abs(c) > 0 ? c / std::abs(c) : cplx(1.0); };
        for (Eigen::Index i = 0; i < nt; ++i) xi(i) = std::sqrt(std::max(X(i, i).real(), 0.0)) * ph(ut(i));
        for (Eigen::Index i = 0; i < nr; ++i) xi(nt + i) = std::sqrt(std::max(X(nt + i, nt + i).real(), 0.0)) * ph(ur(i));
        if (profile_score(kind, bp, project_profile(bp.layout, xi, N)) > best.score) pick = xi;
    }
    PhaseProfile p = project_profile(bp.layout, pick, N);
    if (bp.layout.coupled) polish_split(kind, bp, p);
    for (int n : it) prof.t(n) = p.t(n);
    for (int n : ir) prof.r(n) = p.r(n);

    // Beam directions for the recovered profile.
    RelaxedPhi rank1;
    rank1.of(Side::t) = p.t * p.t.adjoint();
    rank1.of(Side::r) = p.r * p.r.adjoint();
    if (kind == Kind::Uplink) {
        for (int k : bp.users) {
            const CVec h = cascaded_row(*bp.ch, p, k).adjoint();
            dirs[k] = h.norm() > 0 ? CVec(h.normalized()) : CVec(CVec::Unit(h.size(), 0));
        }
        return;
    }
    const auto V = v_step(kind, bp, rank1, bcd.V, cfg);
    for (int k : bp.users) {
        const CVec h = cascaded_row(*bp.ch, p, k).adjoint();
        const auto r = kernel::gaussian_randomize(
            CMat(0.5 * (V[k] + V[k].adjoint())), cfg.candidates,
            [](const CVec& c) { return c.norm() > 0 ? CVec(c.normalized()) : c; },
            [&](const CVec& c) { return std::norm(h.dot(c)); }, rng);
        dirs[k] = r.vec.norm() > 0 ? r.vec : CVec(h.normalized());
    }
}

}  // namespace detail

/// Shared driver: ES and CONV solve one problem over all users, TS solves one
/// problem per side with half the beam budget each. Powers are then set
/// across all users so that fairness holds exactly, with ||V||_F^2 = 1 per
/// slot (TS serves the two groups in separate slots).
template <typename Rng>
PhaseResult optimize_phase(Kind kind, const PhaseChannels& ch, const RMat& beta, const SystemConfig& cfg, Mode mode,
                           double sigma2, Rng& rng) {
    const int N = static_cast<int>(ch.G.rows());
    const int K = static_cast<int>(ch.g_t.size());
    require(beta.rows() == K && beta.cols() == K, "optimize_phase: fairness matrix size mismatch");
    const auto groups = user_groups(ch);
    PhaseResult out;
    out.profile = {CVec::Zero(N), CVec::Zero(N), mode};
    std::vector<CVec> dirs(static_cast<std::size_t>(K));

    auto make = [&](Layout l, std::vector<int> users, double budget) {
        BcdProblem bp;
        bp.ch = &ch;
        bp.beta = beta;
        bp.users = std::move(users);
        bp.layout = std::move(l);
        bp.sigma2 = sigma2;
        bp.budget = budget;
        return bp;
    };
    if (mode == Mode::TS) {
        for (Side s : kSides) {
            std::vector<int> users;
            for (int k = 0; k < K; ++k)
                if (groups[k] == s) users.push_back(k);
            if (users.empty()) continue;
            detail::solve_subproblem(kind, make(make_layout(mode, N, s), users, 0.5), cfg, rng, out.profile, dirs, out);
        }
    } else {
        std::vector<int> users(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) users[k] = k;
        detail::solve_subproblem(kind, make(make_layout(mode, N), users, 1.0), cfg, rng, out.profile, dirs, out);
    }
    out.V = rebalance_beams(ch, out.profile, dirs, beta, 1.0, mode == Mode::TS);
    out.z = RVec(K);
    for (int k = 0; k < K; ++k) out.z(k) = effective_gain(ch, out.profile, out.V.col(k), k);
    return out;
}

template <typename Rng>
PhaseResult optimize_energy_phase(const PhaseChannels& ch, const RMat& beta, const SystemConfig& cfg, Rng& rng,
                                  Mode mode = Mode::ES) {
    require(mode != Mode::TS, "optimize_energy_phase: energy transfer uses ES or the conventional layout");
    return optimize_phase(Kind::Energy, ch, beta, cfg, mode, 1.0, rng);
}

template <typename Rng>
PhaseResult optimize_uplink(const PhaseChannels& ch, const RMat& beta, const SystemConfig& cfg, Mode mode, Rng& rng) {
    return optimize_phase(Kind::Uplink, ch, beta, cfg, mode, 1.0, rng);
}

template <typename Rng>
PhaseResult optimize_downlink(const PhaseChannels& ch, const RMat& beta, const SystemConfig& cfg, Mode mode,
                              double sigma2, Rng& rng) {
    return optimize_phase(Kind::Downlink, ch, beta, cfg, mode, sigma2, rng);
}

/// Conventional-RIS baseline for all three phases.
template <typename Rng>
std::pair<StarProfile, BeamformingSet> conventional_ris_profiles(const ChannelSet& cs, const RMat& beta,
                                                                 const SystemConfig& cfg, double sigma2, Rng& rng) {
    StarProfile sp;
    BeamformingSet bs;
    const auto e = optimize_energy_phase(cs[Phase::e], beta, cfg, rng, Mode::CONV);
    const auto u = optimize_uplink(cs[Phase::u], beta, cfg, Mode::CONV, rng);
    const auto d = optimize_downlink(cs[Phase::d], beta, cfg, Mode::CONV, sigma2, rng);
    sp[Phase::e] = e.profile;
    sp[Phase::u] = u.profile;
    sp[Phase::d] = d.profile;
    bs[Phase::e] = e.V;
    bs[Phase::u] = u.V;
    bs[Phase::d] = d.V;
    return {sp, bs};
}

/// Per-phase gains consumed by resource allocation.
struct GainSummary {
    std::vector<Side> group;
    RVec z_e;         // energy-transfer gains
    RVec z_u;         // uplink gains
    RVec v_norm2;     // ||v_u,k||^2
    RMat cross;       // cross(m, k) = |h_u,m v_u,k|^2
    RVec z_d;         // downlink gains
    double sigma2 = 1.0;
    double z_worst = 0.0;    // min_k z_d,k / sigma^2
    double z_worst_t = 0.0;  // over group A
    double z_worst_r = 0.0;  // over group B
    Mode up = Mode::ES;
    Mode down = Mode::ES;
};

inline GainSummary summarize_gains(const ChannelSet& cs, const PhaseResult& e, const PhaseResult& u,
                                   const PhaseResult& d, double sigma2) {
    GainSummary g;
    const auto& chu = cs[Phase::u];
    const int K = static_cast<int>(chu.g_t.size());
    g.group = user_groups(chu);
    g.z_e = e.z;
    g.z_u = u.z;
    g.z_d = d.z;
    g.sigma2 = sigma2;
    g.up = u.profile.mode;
    g.down = d.profile.mode;
    g.v_norm2 = RVec(K);
    g.cross = RMat(K, K);
    for (int m = 0; m < K; ++m) {
        const auto h = cascaded_row(chu, u.profile, m);
        for (int k = 0; k < K; ++k) g.cross(m, k) = std::norm((h * u.V.col(k))(0));
    }
    for (int k = 0; k < K; ++k) g.v_norm2(k) = u.V.col(k).squaredNorm();
    g.z_worst = g.z_worst_t = g.z_worst_r = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
        const double zn = d.z(k) / sigma2;
        g.z_worst = std::min(g.z_worst, zn);
        (g.group[k] == Side::t ? g.z_worst_t : g.z_worst_r) = std::min(g.group[k] == Side::t ? g.z_worst_t : g.z_worst_r, zn);
    }
    return g;
}

}  // namespace starfl::beam

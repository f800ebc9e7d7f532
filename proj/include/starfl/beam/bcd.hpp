#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "starfl/beam/matrices.hpp"
#include "starfl/config.hpp"
#include "starfl/kernel/eig.hpp"
#include "starfl/kernel/randomize.hpp"
#include "starfl/kernel/sdp.hpp"

namespace starfl::beam {

/// Energy: maximize the sum of gains. Uplink: maximize the sum of
/// noise-normalized gains z_k / ||v_k||^2. Downlink: maximize the worst gain.
enum class Kind { Energy, Uplink, Downlink };

struct RelaxedPhi {
    std::array<CMat, 2> side;  // N x N, zero outside the layout
    const CMat& of(Side s) const { return side[static_cast<int>(s)]; }
    CMat& of(Side s) { return side[static_cast<int>(s)]; }
};

struct TracePoint {
    int iteration;
    double objective;
    double fairness_residual;
};

/// One BCD instance: a channel, the users it serves (users[0] is the
/// fairness reference) and the RIS layout.
struct BcdProblem {
    const PhaseChannels* ch = nullptr;
    RMat beta;
    std::vector<int> users;
    Layout layout;
    double sigma2 = 1.0;
    double budget = 1.0;
};

struct BcdResult {
    RelaxedPhi phi;
    std::vector<CMat> V;  // relaxed V_k, one per user of the channel
    std::vector<TracePoint> trace;
    int iterations = 0;
    bool converged = false;
};

inline constexpr std::array<Side, 2> kSides{Side::t, Side::r};

inline double relaxed_gain(const BcdProblem& p, const RelaxedPhi& phi, const CMat& Vk, int k) {
    double z = 0.0;
    for (Side s : kSides) {
        if (!p.layout.active(s)) continue;
        z += (build_gamma(*p.ch, phi.of(s), k, s) * Vk).trace().real();
    }
    return std::max(z, 0.0);
}

inline double fairness_residual(const BcdProblem& p, const std::vector<double>& z) {
    const int ref = p.users.front();
    if (!(z[ref] > 0)) return std::numeric_limits<double>::infinity();
    double r = 0.0;
    for (int k : p.users) r = std::max(r, std::abs(z[k] - p.beta(k, ref) * z[ref]) / z[ref]);
    return r;
}

inline double bcd_objective(Kind kind, const BcdProblem& p, const RelaxedPhi& phi, const std::vector<CMat>& V,
                            double* residual = nullptr) {
    std::vector<double> z(V.size(), 0.0);
    for (int k : p.users) z[k] = relaxed_gain(p, phi, V[k], k);
    if (residual) *residual = fairness_residual(p, z);
    double obj = kind == Kind::Downlink ? std::numeric_limits<double>::infinity() : 0.0;
    for (int k : p.users) {
        switch (kind) {
            case Kind::Energy: obj += z[k]; break;
            case Kind::Uplink: obj += z[k] / std::max(V[k].trace().real(), 1e-300); break;
            case Kind::Downlink: obj = std::min(obj, z[k] / p.sigma2); break;
        }
    }
    return obj;
}

namespace detail {

inline kernel::SdpSolution solve(const kernel::SdpProblem& sp, const SystemConfig& cfg) {
    kernel::SdpOptions o;
    o.tol = cfg.sdp_tol;
    try {
        return kernel::solve_sdp(sp, o);
    } catch (const kernel::SdpNotConverged& e) {
        const auto& b = e.best;
        if (b.residual <= 1e-6 && b.gap <= 1e-6 * (1.0 + std::abs(b.objective))) return b;
        throw NumericError(std::string("beam SDP did not converge: ") + e.what());
    } catch (const kernel::SdpInfeasible& e) {
        throw NumericError(std::string("beam SDP infeasible: ") + e.what());
    } catch (const kernel::SdpUnbounded& e) {
        throw NumericError(std::string("beam SDP unbounded: ") + e.what());
    }
}

inline double max_abs_trace(const std::vector<CMat>& ms) {
    double m = 0.0;
    for (const auto& a : ms) m = std::max(m, std::abs(a.trace().real()));
    return m;
}

}  // namespace detail

/// Phase-profile subproblem with V fixed: SDP over the relaxed Phi blocks.
/// Energy/Uplink maximize the reference user's gain, Downlink the worst gain,
/// under the fairness equalities against the reference user. With V fixed
/// those equalities can be infeasible (unit-modulus blocks cannot rescale one
/// group against the other); the step then runs without them and the beam
/// step restores fairness through the column powers.
inline RelaxedPhi phi_step(Kind kind, const BcdProblem& p, const std::vector<CMat>& V, const SystemConfig& cfg,
                           bool fair = true) {
    const int N = static_cast<int>(p.ch->G.rows());
    const int ref = p.users.front();
    // lam[k][s] restricted to the active indices of side s.
    std::vector<std::array<CMat, 2>> lam(V.size());
    std::vector<CMat> all;
    for (int k : p.users)
        for (Side s : kSides) {
            if (!p.layout.active(s)) continue;
            lam[k][static_cast<int>(s)] = restrict_to(build_lambda(*p.ch, V[k], k, s), p.layout.of(s));
            all.push_back(lam[k][static_cast<int>(s)]);
        }
    const double scale = 1.0 / std::max(detail::max_abs_trace(all), 1e-300);

    kernel::SdpProblem sp;
    std::array<int, 2> blk{-1, -1};
    for (Side s : kSides)
        if (p.layout.active(s))
            blk[static_cast<int>(s)] = sp.add_block(static_cast<int>(p.layout.of(s).size()));

    auto terms_for = [&](int k, double w) {
        std::vector<kernel::SdpTerm> t;
        for (Side s : kSides) {
            const int si = static_cast<int>(s);
            if (blk[si] >= 0) t.push_back({blk[si], w * scale * lam[k][si]});
        }
        return t;
    };

    if (kind == Kind::Downlink) {
        const int t = sp.add_scalar();
        sp.objective_scalars.push_back({t, 1.0});
        for (int k : p.users) sp.constraints.push_back({terms_for(k, -1.0), {{t, 1.0}}, kernel::Sense::Le, 0.0});
    } else {
        sp.objective = terms_for(ref, 1.0);
    }
    for (int k : p.users) {
        if (k == ref || !fair) continue;
        kernel::SdpConstraint c;
        for (Side s : kSides) {
            const int si = static_cast<int>(s);
            if (blk[si] < 0) continue;
            c.terms.push_back({blk[si], scale * (lam[k][si] - p.beta(k, ref) * lam[ref][si])});
        }
        double nrm = 0.0;
        for (const auto& t : c.terms) nrm += t.coeff.squaredNorm();
        nrm = std::sqrt(nrm);
        if (nrm <= 0) continue;
        for (auto& t : c.terms) t.coeff /= nrm;
        sp.constraints.push_back(std::move(c));
    }
    if (p.layout.coupled) sp.add_diag_constraint(blk[0], blk[1], 1.0);
    else
        for (int b : blk)
            if (b >= 0) sp.add_diag_constraint(b, -1, 1.0);

    kernel::SdpSolution sol;
    try {
        sol = detail::solve(sp, cfg);
    } catch (const NumericError&) {
        if (!fair || p.users.size() < 2) throw;
        return phi_step(kind, p, V, cfg, false);
    }
    RelaxedPhi out;
    for (Side s : kSides) {
        const int si = static_cast<int>(s);
        out.side[si] = blk[si] >= 0 ? expand_from(sol.X[blk[si]], p.layout.of(s), N) : CMat::Zero(N, N);
    }
    return out;
}

/// Beam subproblem with Phi fixed. Energy/Downlink solve an SDP over the
/// per-user V_k; Uplink takes the principal eigenvector of each Gamma_k and
/// sets column powers so that the fairness ratios hold exactly.
inline std::vector<CMat> v_step(Kind kind, const BcdProblem& p, const RelaxedPhi& phi, std::vector<CMat> V,
                                const SystemConfig& cfg) {
    const int ref = p.users.front();
    std::vector<CMat> gam(V.size());
    for (int k : p.users) {
        gam[k] = CMat::Zero(p.ch->G.cols(), p.ch->G.cols());
        for (Side s : kSides)
            if (p.layout.active(s)) gam[k] += build_gamma(*p.ch, phi.of(s), k, s);
        gam[k] = 0.5 * (gam[k] + gam[k].adjoint());
    }
    if (kind == Kind::Uplink) {
        std::vector<CVec> u(V.size());
        std::vector<double> lam(V.size(), 0.0);
        double denom = 0.0;
        for (int k : p.users) {
            auto e = kernel::hermitian_eig_max(gam[k]);
            u[k] = e.u;
            lam[k] = std::max(e.lambda, 1e-300);
            denom += p.beta(k, ref) / lam[k];
        }
        for (int k : p.users) V[k] = (p.budget * p.beta(k, ref) / lam[k] / denom) * u[k] * u[k].adjoint();
        return V;
    }

    std::vector<CMat> used;
    for (int k : p.users) used.push_back(gam[k]);
    const double scale = 1.0 / std::max(detail::max_abs_trace(used), 1e-300);
    const int M = static_cast<int>(p.ch->G.cols());

    kernel::SdpProblem sp;
    std::vector<int> blk(V.size(), -1);
    for (int k : p.users) blk[k] = sp.add_block(M);
    int t = -1;
    if (kind == Kind::Downlink) {
        t = sp.add_scalar();
        sp.objective_scalars.push_back({t, 1.0});
        for (int k : p.users) sp.constraints.push_back({{{blk[k], -scale * gam[k]}}, {{t, 1.0}}, kernel::Sense::Le, 0.0});
    } else {
        for (int k : p.users) sp.objective.push_back({blk[k], scale * gam[k]});
    }
    kernel::SdpConstraint budget;
    for (int k : p.users) budget.terms.push_back({blk[k], CMat::Identity(M, M)});
    budget.sense = kernel::Sense::Le;
    budget.rhs = p.budget;
    sp.constraints.push_back(std::move(budget));
    for (int k : p.users) {
        if (k == ref) continue;
        const double nrm = std::sqrt((scale * gam[k]).squaredNorm() + std::pow(p.beta(k, ref) * scale, 2) * gam[ref].squaredNorm());
        if (nrm <= 0) continue;
        sp.constraints.push_back(
            {{{blk[k], scale * gam[k] / nrm}, {blk[ref], -p.beta(k, ref) * scale * gam[ref] / nrm}}, {}, kernel::Sense::Eq, 0.0});
    }
    const auto sol = detail::solve(sp, cfg);
    for (int k : p.users) V[k] = sol.X[blk[k]];
    return V;
}

template <typename Rng>
RelaxedPhi random_phi(const Layout& l, int N, Rng& rng) {
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    RelaxedPhi out;
    for (Side s : kSides) {
        CVec v = CVec::Zero(N);
        for (int n : l.of(s)) v(n) = std::polar(l.coupled ? std::sqrt(0.5) : 1.0, ang(rng));
        out.of(s) = v * v.adjoint();
    }
    return out;
}

template <typename Rng>
std::vector<CMat> random_beams(const BcdProblem& p, int K, Rng& rng) {
    const int M = static_cast<int>(p.ch->G.cols());
    std::vector<CVec> v(static_cast<std::size_t>(K), CVec::Zero(M));
    double tot = 0.0;
    for (int k : p.users) {
        v[k] = kernel::complex_gaussian(M, rng);
        tot += v[k].squaredNorm();
    }
    std::vector<CMat> V(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) V[k] = (p.budget / tot) * v[k] * v[k].adjoint();
    return V;
}

/// Alternate the two subproblems until the objective improves by less than
/// eps (relative) or the iteration cap is hit. A step that would lower the
/// objective (solver noise) is rejected and ends the loop.
template <typename Rng>
BcdResult run_bcd(Kind kind, const BcdProblem& p, const SystemConfig& cfg, Rng& rng) {
    require(p.ch && !p.users.empty(), "run_bcd: empty problem");
    const int N = static_cast<int>(p.ch->G.rows());
    const int K = static_cast<int>(p.ch->g_t.size());
    BcdResult r;
    r.phi = random_phi(p.layout, N, rng);
    r.V = random_beams(p, K, rng);
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 1; it <= cfg.bcd_max_iter; ++it) {
        RelaxedPhi phi;
        std::vector<CMat> V;
        if (kind == Kind::Uplink) {
            V = v_step(kind, p, r.phi, r.V, cfg);
            phi = phi_step(kind, p, V, cfg);
        } else {
            phi = phi_step(kind, p, r.V, cfg);
            V = v_step(kind, p, phi, r.V, cfg);
        }
        double res = 0.0;
        const double obj = bcd_objective(kind, p, phi, V, &res);
        if (it > 1 && obj < prev) {
            r.converged = true;
            break;
        }
        r.phi = std::move(phi);
        r.V = std::move(V);
        r.trace.push_back({it, obj, res});
        r.iterations = it;
        if (it > 1 && obj - prev <= cfg.eps * std::abs(prev)) {
            r.converged = true;
            break;
        }
        prev = obj;
    }
    return r;
}

}  // namespace starfl::beam

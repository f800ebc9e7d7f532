#pragma once

#include <ostream>
#include <random>
#include <string>

#include "starfl/kernel/randomize.hpp"
#include "starfl/kernel/sdp.hpp"
#include "starfl/sim/trial.hpp"

namespace starfl::sim {

struct ValidationReport {
    int checks = 0;
    int failures = 0;
    bool ok() const { return failures == 0; }
};

namespace detail {

inline void report(std::ostream& os, ValidationReport& r, bool pass, const std::string& what) {
    ++r.checks;
    if (!pass) ++r.failures;
    os << (pass ? "PASS " : "FAIL ") << what << '\n';
}

}  // namespace detail

/// Quick property and oracle checks on `instances` draws of `c`: SDP against
/// the closed-form 2x2 optimum, plan invariants, optimality of P_e = P_max on a power grid and
/// scan-order independence of the allocation.
inline ValidationReport validate(const SystemConfig& c, int instances, std::ostream& os) {
    ValidationReport rep;
    // maximize Tr(C X) s.t. diag(X) = 1: optimum c11 + c22 + 2|c12|.
    std::mt19937_64 rng(c.seed);
    double worst_err = 0.0, worst_gap = 0.0;
    for (int i = 0; i < 5; ++i) {
        const CVec a = kernel::complex_gaussian(2, rng), b = kernel::complex_gaussian(2, rng);
        const CMat C = a * a.adjoint() - 0.3 * b * b.adjoint();
        kernel::SdpProblem p;
        const int x = p.add_block(2);
        p.objective.push_back({x, C});
        p.add_diag_constraint(x, -1);
        const auto s = kernel::solve_sdp(p, {c.sdp_tol});
        const double oracle = C(0, 0).real() + C(1, 1).real() + 2 * std::abs(C(0, 1));
        worst_err = std::max(worst_err, std::abs(s.objective - oracle));
        worst_gap = std::max(worst_gap, s.gap);
    }
    detail::report(os, rep, worst_err <= 1e-3 && worst_gap <= 1e-6,
                   "SDP 2x2 closed form (max error " + std::to_string(worst_err) + ", max gap " +
                       std::to_string(worst_gap) + ")");

    int feasible = 0, bad_plans = 0, thm1 = 0, thm2 = 0;
    const double tol = 2 * c.eps * c.P_max;
    for (int t = 0; t < instances; ++t) {
        TrialInstance in(c, t);
        for (Scenario s : kScenarios) {
            const auto g = in.gains(s);
            const auto a = alloc::allocate(g, in.workload(), s, c);
            if (!a.feasible) continue;
            ++feasible;
            const auto v = alloc::check_plan(a.plan, g, in.workload(), c);
            if (!v.empty()) {
                ++bad_plans;
                os << "  trial " << t << ' ' << to_string(s) << ": " << v.front() << '\n';
            }
            alloc::AllocOptions desc;
            desc.scan = alloc::ScanOrder::Descending;
            const auto b = alloc::allocate(g, in.workload(), s, c, desc);
            if (!b.feasible || std::abs(b.energy.total - a.energy.total) > tol) ++thm2;
            if (s == Scenario::ES_ES || s == Scenario::TS_TS) {
                const auto r = alloc::verify_theorem1(g, in.workload(), s, c,
                                                      {0.25 * c.P_max, 0.5 * c.P_max, 0.75 * c.P_max}, tol);
                if (!r.violations.empty()) ++thm1;
            }
        }
    }
    detail::report(os, rep, feasible > 0,
                   "feasible plans: " + std::to_string(feasible) + " of " + std::to_string(5 * instances));
    detail::report(os, rep, bad_plans == 0, "plan invariants (" + std::to_string(bad_plans) + " violating)");
    detail::report(os, rep, thm1 == 0, "P_e = P_max is optimal on the power grid (" + std::to_string(thm1) + " violating)");
    detail::report(os, rep, thm2 == 0, "reversed scan order gives the same energy (" + std::to_string(thm2) + " violating)");
    return rep;
}

}  // namespace starfl::sim

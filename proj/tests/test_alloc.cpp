#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "starfl/alloc/allocate.hpp"
#include "starfl/sim/trial.hpp"

using namespace starfl;
using namespace starfl::alloc;
using beam::GainSummary;

namespace {

SystemConfig desk() { return load_config(STARFL_SOURCE_DIR "/configs/desk.cfg"); }

// Hand-built gains: unit combiners, no cross-talk unless set later.
GainSummary synth(std::vector<Side> groups, RVec z_u) {
    GainSummary g;
    const auto K = static_cast<Eigen::Index>(groups.size());
    g.group = std::move(groups);
    g.z_u = std::move(z_u);
    g.z_e = RVec::Ones(K);
    g.z_d = RVec::Ones(K);
    g.v_norm2 = RVec::Ones(K);
    g.cross = RMat::Zero(K, K);
    g.z_worst = g.z_worst_t = g.z_worst_r = 1.0;
    return g;
}

}  // namespace

TEST(UplinkRate, UnitSinrGivesBandwidth) {
    const auto c = desk();
    auto g = synth({Side::t}, RVec::Constant(1, 3e-9));
    g.v_norm2(0) = 2.0;
    const RVec p = RVec::Constant(1, noise_power(c) * 2.0 / 3e-9);
    EXPECT_NEAR(uplink_rate(0, p, g, Mode::ES, c) / c.B, 1.0, 1e-12);
    EXPECT_EQ(uplink_rate(0, RVec::Zero(1), g, Mode::ES, c), 0.0);
}

TEST(UplinkRate, InterferenceSetsFollowMode) {
    const auto c = desk();
    const double n = noise_power(c);
    // Users 0, 1 in group A (0 decoded first), user 2 in group B.
    auto g = synth({Side::t, Side::t, Side::r}, (RVec(3) << 2.0, 1.0, 1.5).finished());
    g.cross << 0, 0.3, 0.2, 0.4, 0, 0.1, 0.5, 0.6, 0;
    const RVec p = (RVec(3) << 1e-13, 2e-13, 3e-13).finished();
    auto rate = [&](double J, int k) { return c.B * std::log2(1 + p(k) * g.z_u(k) / (J + n)); };
    // TS: only the later-decoded user of the same group.
    EXPECT_NEAR(uplink_rate(0, p, g, Mode::TS, c), rate(p(1) * 0.4, 0), 1e-9);
    EXPECT_NEAR(uplink_rate(1, p, g, Mode::TS, c), rate(0.0, 1), 1e-9);
    EXPECT_NEAR(uplink_rate(2, p, g, Mode::TS, c), rate(0.0, 2), 1e-9);
    // ES: the other group interferes in full.
    EXPECT_NEAR(uplink_rate(0, p, g, Mode::ES, c), rate(p(1) * 0.4 + p(2) * 0.5, 0), 1e-9);
    EXPECT_NEAR(uplink_rate(1, p, g, Mode::ES, c), rate(p(2) * 0.6, 1), 1e-9);
    EXPECT_NEAR(uplink_rate(2, p, g, Mode::ES, c), rate(p(0) * 0.2 + p(1) * 0.1, 2), 1e-9);
}

TEST(UplinkPowers, SingleUserScalarSolve) {
    const auto c = desk();
    auto g = synth({Side::r}, RVec::Constant(1, 4e-9));
    g.v_norm2(0) = 1.5;
    const RVec p = solve_uplink_powers(RVec::Constant(1, 3 * c.B), g, Mode::ES, c);
    EXPECT_NEAR(p(0) / (7.0 * noise_power(c) * 1.5 / 4e-9), 1.0, 1e-12);
}

TEST(UplinkPowers, TimeSwitchingBackSubstitution) {
    auto c = desk();
    c.p_max = 10;
    auto g = synth({Side::t, Side::t}, RVec::Ones(2));
    g.v_norm2.setConstant(1.0 / noise_power(c));  // noise term 1
    g.cross << 0, 1, 1, 0;
    const RVec p = solve_uplink_powers(RVec::Constant(2, c.B), g, Mode::TS, c);  // gamma = 1
    EXPECT_NEAR(p(1), 1.0, 1e-12);
    EXPECT_NEAR(p(0), 2.0, 1e-12);
}

TEST(UplinkPowers, CoupledSystemResidual) {
    const auto c = desk();
    const double n = noise_power(c);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (int rep = 0; rep < 10; ++rep) {
        auto g = synth({Side::t, Side::r}, (RVec(2) << u(rng), u(rng)).finished() * 1e-9);
        g.cross << 0, u(rng) * 1e-10, u(rng) * 1e-10, 0;
        const RVec rates = (RVec(2) << u(rng), u(rng)).finished() * c.B;
        const RVec p = solve_uplink_powers(rates, g, Mode::ES, c);
        for (int k = 0; k < 2; ++k) {
            const double gamma = std::exp2(rates(k) / c.B) - 1;
            const int m = 1 - k;
            const double lhs = p(k) * g.z_u(k) - gamma * p(m) * g.cross(m, k);
            EXPECT_NEAR(lhs / (gamma * n), 1.0, 1e-10);
            EXPECT_NEAR(uplink_rate(k, p, g, Mode::ES, c) / rates(k), 1.0, 1e-10);
        }
    }
}

TEST(UplinkPowers, CapAndInfeasibleTargets) {
    const auto c = desk();
    auto g = synth({Side::t}, RVec::Constant(1, 1e-20));
    EXPECT_THROW(solve_uplink_powers(RVec::Constant(1, 10 * c.B), g, Mode::ES, c), Infeasible);
    // Strong mutual interference: no positive solution.
    auto h = synth({Side::t, Side::r}, RVec::Ones(2));
    h.cross << 0, 1, 1, 0;
    EXPECT_THROW(solve_uplink_powers(RVec::Constant(2, 3 * c.B), h, Mode::ES, c), Infeasible);
}

TEST(LocalSchedule, ClosedFormExample) {
    auto c = desk();
    c.a = 1e-28;
    const double L = 1e7 / c.C_k;
    const auto [tl, f] = local_schedule_one(1e-7, L, 0.5, 5.0, c);
    EXPECT_NEAR(tl, 1.0, 1e-12);
    EXPECT_NEAR(f / 1e7, 1.0, 1e-12);
    EXPECT_NEAR(c.a * f * f * f * tl / 1e-7, 1.0, 1e-9);
    // More energy, shorter time.
    double prev = tl;
    for (double H : {1e-6, 1e-5, 1e-3}) {
        const double t = local_schedule_one(H, L, 0.0, 5.0, c).first;
        EXPECT_LT(t, prev);
        prev = t;
    }
    EXPECT_THROW(local_schedule_one(0.0, L, 0.5, 5.0, c), Infeasible);
    EXPECT_THROW(local_schedule_one(1e-7, L, 2.0, 5.0, c), Infeasible);
    EXPECT_THROW(local_schedule_one(1e-7, L, 0.5, 0.9, c), Infeasible);
}

TEST(LocalSchedule, PlugBackAcrossUsers) {
    const auto c = desk();
    auto g = synth({Side::t, Side::r}, RVec::Ones(2));
    g.z_e << 2e-8, 3e-8;
    Workload w{(RVec(2) << 2e5, 7e5).finished(), RVec::Ones(2), c.L_down};
    const RVec p = (RVec(2) << 1e-9, 2e-9).finished(), tu = (RVec(2) << 0.1, 0.2).finished();
    const auto [tl, f] = local_schedule(0.05, p, tu, g, w, RVec::Constant(2, c.T), c.P_max, c);
    for (int k = 0; k < 2; ++k) {
        const double H = c.eta * c.P_max * g.z_e(k) * 0.05;
        EXPECT_NEAR((c.a * std::pow(f(k), 3) * tl(k) + p(k) * tu(k)) / H, 1.0, 1e-9);
        EXPECT_NEAR(f(k) * tl(k) / c.C_k / w.L_local(k), 1.0, 1e-12);
    }
}

TEST(Downlink, EsUnitExample) {
    auto c = desk();
    c.B = 1e6;
    const auto d = downlink_es(1.0, 1.0, c, 1e6);
    EXPECT_NEAR(d.P, 1.0, 1e-8);
    EXPECT_NEAR(d.tau, 1.0, 1e-8);
    EXPECT_LE(d.tau, 1.0);
    // Longer budgets need less power; power never exceeds P_max.
    EXPECT_LT(downlink_es(1.0, 10.0, c, 1e6).P, 0.1);
    EXPECT_THROW(downlink_es(1.0, 1e-3, c, 1e6), Infeasible);
}

TEST(Downlink, EnergyIncreasesWithPower) {
    // Numeric spot check of P L / (B log2(1 + P z)) on a log grid.
    for (double z : {0.1, 1.0, 1e4}) {
        double prev = 0;
        for (double P = 1e-6; P <= 10; P *= 1.5) {
            const double e = P * downlink_time(1e6, P, z, 2e6);
            EXPECT_GT(e, prev);
            prev = e;
        }
    }
}

TEST(Downlink, TsSymmetricSplit) {
    auto c = desk();
    c.eps = 1e-3;
    const auto d = downlink_ts(2.0, 2.0, 1.5, c, c.B);
    EXPECT_NEAR(d.P_t, d.P_r, c.eps * c.P_max);
    EXPECT_NEAR(d.tau_t, d.tau_r, 2e-3);
    EXPECT_LE(d.tau_t + d.tau_r, 1.5 * (1 + 1e-9));
}

TEST(Downlink, TsMatchesPowerGrid) {
    auto c = desk();
    c.eps = 1e-3;
    c.B = 1e6;
    const double bits = 1e6, T = 1.0;
    for (auto [zt, zr] : {std::pair{3.0, 1.0}, std::pair{0.7, 5.0}, std::pair{50.0, 40.0}}) {
        const auto d = downlink_ts(zt, zr, T, c, bits);
        const double step = c.eps * c.P_max;
        double oracle = 1e300;
        for (int i = 1; i * step < c.P_max; ++i)
            for (int j = 1; (i + j) * step <= c.P_max * (1 + 1e-12); ++j) {
                const double Pt = i * step, Pr = j * step;
                const double tt = downlink_time(bits, Pt, zt, c.B), tr = downlink_time(bits, Pr, zr, c.B);
                if (tt + tr <= T) oracle = std::min(oracle, Pt * tt + Pr * tr);
            }
        EXPECT_NEAR(d.energy(), oracle, 2 * c.eps * T);
        EXPECT_LE(d.tau_t + d.tau_r, T * (1 + 1e-9));
        EXPECT_LE(d.P_t + d.P_r, c.P_max * (1 + 1e-12));
    }
}

TEST(Downlink, TsLongBudgetDropsToGridFloor) {
    auto c = desk();
    c.eps = 1e-3;
    const auto d = downlink_ts(1e6, 1e6, 1e4, c, 1e6);
    EXPECT_LE(std::max(d.P_t, d.P_r), 2 * c.eps * c.P_max);
}

TEST(TotalEnergy, Arithmetic) {
    const auto c = desk();
    ResourcePlan p;
    p.P_e = 10;
    p.tau_e = 0.5;
    p.down.mode = Mode::ES;
    p.down.P = 1;
    p.down.tau = 1;
    p.tau_l = p.f = p.tau_u = p.p_u = RVec::Zero(1);
    EXPECT_DOUBLE_EQ(total_energy(p, c).total, 6.0);
    p.down.mode = Mode::TS;
    p.down.P_side[0] = 2;
    p.down.tau_side[0] = 0.25;
    p.down.P_side[1] = 3;
    p.down.tau_side[1] = 0.5;
    const auto e = total_energy(p, c);
    EXPECT_DOUBLE_EQ(e.total, 5.0 + 0.5 + 1.5);
    EXPECT_DOUBLE_EQ(e.harvest + e.downlink, e.total);
}

// End-to-end on drawn instances.

namespace {

SystemConfig micro() { return load_config(STARFL_SOURCE_DIR "/configs/micro.cfg"); }

double tolerance(const SystemConfig& c) { return 2 * c.eps * c.P_max; }

}  // namespace

TEST(Allocate, PlansMeetBudgetAndDelay) {
    const auto c = desk();
    int feasible = 0;
    for (int t = 0; t < 4; ++t) {
        sim::TrialInstance in(c, t);
        for (Scenario s : kScenarios) {
            const auto g = in.gains(s);
            const auto a = allocate(g, in.workload(), s, c);
            if (!a.feasible) {
                EXPECT_FALSE(a.reason.empty());
                continue;
            }
            ++feasible;
            const auto& p = a.plan;
            EXPECT_TRUE(check_plan(p, g, in.workload(), c).empty()) << to_string(s) << " trial " << t;
            const int slots = uplink_mode(s) == Mode::TS ? 2 : 1;
            for (int k = 0; k < c.K(); ++k) {
                const double harvested = c.eta * p.P_e * g.z_e(k) * p.tau_e;
                const double used = p.p_u(k) * p.tau_u(k) + c.a * std::pow(p.f(k), 3) * p.tau_l(k);
                EXPECT_LE(used, harvested * (1 + 1e-6));
                EXPECT_LE(p.tau_l(k) + slots * p.tau_u(k) + p.down.time(), c.T + c.eps);
                EXPECT_GE(p.tau_l(k), p.tau_e * (1 - 1e-12));
            }
            // tau_e sits on the eps grid.
            EXPECT_NEAR(p.tau_e / c.eps, std::round(p.tau_e / c.eps), 1e-6);
            EXPECT_NEAR(a.energy.total, p.P_e * p.tau_e + p.down.energy(), 1e-12 * a.energy.total);
        }
    }
    EXPECT_GT(feasible, 0);
}

TEST(Allocate, TooShortDelayIsInfeasible) {
    auto c = desk();
    sim::TrialInstance in(c, 0);
    const auto g = in.gains(Scenario::ES_ES);
    c.T = 0.5 * downlink_time(in.workload().L_down, c.P_max, g.z_worst, c.B);
    const auto a = allocate(g, in.workload(), Scenario::ES_ES, c);
    EXPECT_FALSE(a.feasible);
    EXPECT_FALSE(a.reason.empty());
}

TEST(Allocate, ScanDirectionDoesNotMatter) {
    const auto c = desk();
    for (int t = 0; t < 3; ++t) {
        sim::TrialInstance in(c, t);
        for (Scenario s : kScenarios) {
            const auto g = in.gains(s);
            AllocOptions desc;
            desc.scan = ScanOrder::Descending;
            const auto a = allocate(g, in.workload(), s, c), b = allocate(g, in.workload(), s, c, desc);
            ASSERT_EQ(a.feasible, b.feasible) << to_string(s) << " trial " << t;
            if (a.feasible) {
                EXPECT_NEAR(a.energy.total, b.energy.total, tolerance(c)) << to_string(s) << " trial " << t;
            }
        }
    }
}

TEST(Allocate, FullHarvestPowerIsBest) {
    const auto c = desk();
    for (int t = 0; t < 3; ++t) {
        sim::TrialInstance in(c, t);
        for (Scenario s : {Scenario::ES_ES, Scenario::TS_TS}) {
            const auto g = in.gains(s);
            const auto top = allocate(g, in.workload(), s, c);
            for (double frac : {0.25, 0.5, 0.75}) {
                AllocOptions o;
                o.P_e = frac * c.P_max;
                const auto low = allocate(g, in.workload(), s, c, o);
                if (!low.feasible) continue;
                ASSERT_TRUE(top.feasible);
                EXPECT_LE(top.energy.total, low.energy.total + tolerance(c)) << to_string(s) << " trial " << t;
            }
            EXPECT_TRUE(verify_theorem1(g, in.workload(), s, c, {0.5 * c.P_max}).violations.empty());
        }
    }
}

// Scalar combiners: the TS uplink powers telescope over later-decoded users
// of the same group.
TEST(Allocate, TsUplinkPowersTelescope) {
    auto c = desk();
    c.M = 1;
    const double n = noise_power(c);
    int checked = 0;
    for (int t = 0; t < 3; ++t) {
        sim::TrialInstance in(c, t);
        const auto g = in.gains(Scenario::TS_TS);
        const auto a = allocate(g, in.workload(), Scenario::TS_TS, c);
        if (!a.feasible) continue;
        const auto& p = a.plan;
        const auto order = decoding_order(g);
        for (std::size_t i = 0; i < order.size(); ++i) {
            const int k = order[i];
            double later = 0.0;
            for (std::size_t j = i + 1; j < order.size(); ++j)
                if (g.group[order[j]] == g.group[k]) later += in.workload().L_up(order[j]) / (p.tau_u(order[j]) * c.B);
            const double R = in.workload().L_up(k) / (p.tau_u(k) * c.B);
            const double expect = std::exp2(later) * std::expm1(R * M_LN2) * n * g.v_norm2(k) / g.z_u(k);
            EXPECT_NEAR(p.p_u(k), expect, 1e-8 * expect) << "trial " << t << " user " << k;
            ++checked;
        }
    }
    EXPECT_GT(checked, 0);
}

TEST(Allocate, MatchesBruteForceOnMicroInstances) {
    const auto c = micro();
    int compared = 0;
    for (int t = 0; t < c.trials; ++t) {
        sim::TrialInstance in(c, t);
        for (Scenario s : {Scenario::ES_ES, Scenario::TS_TS}) {
            const auto g = in.gains(s);
            const auto a = allocate(g, in.workload(), s, c);
            const double bf = oracle::brute_force(g, in.workload(), s, c);
            ASSERT_EQ(a.feasible, std::isfinite(bf)) << to_string(s) << " trial " << t;
            if (!a.feasible) continue;
            EXPECT_NEAR(a.energy.total, bf, tolerance(c)) << to_string(s) << " trial " << t;
            ++compared;
        }
    }
    EXPECT_GE(compared, 8);
}

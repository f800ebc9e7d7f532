#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "starfl/kernel/randomize.hpp"
#include "starfl/kernel/search.hpp"

using namespace starfl;
using namespace starfl::kernel;

TEST(OneDimSearch, GridQuantization) {
    EXPECT_NEAR(one_dim_search([](double x) { return x >= 0.35; }, 0, 1, 0.1), 0.4, 1e-12);
    EXPECT_EQ(one_dim_search([](double) { return true; }, 0.25, 1, 0.1), 0.25);
    EXPECT_THROW(one_dim_search([](double) { return false; }, 0, 1, 0.1), Infeasible);
}

TEST(GridSearchMonotone, AgreesWithLinearScanBothDirections) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 200; ++i) {
        const double thr = u(rng) * 1.05;
        auto pred = [thr](double x) { return x >= thr; };
        double lin;
        try {
            lin = one_dim_search(pred, 0, 1, 1e-3);
        } catch (const Infeasible&) {
            EXPECT_THROW(grid_search_monotone(pred, 0, 1, 1e-3), Infeasible);
            EXPECT_THROW(grid_search_monotone(pred, 0, 1, 1e-3, true), Infeasible);
            continue;
        }
        EXPECT_DOUBLE_EQ(grid_search_monotone(pred, 0, 1, 1e-3), lin);
        EXPECT_DOUBLE_EQ(grid_search_monotone(pred, 0, 1, 1e-3, true), lin);
    }
}

TEST(BisectMonotone, Identity) {
    const double x = bisect_monotone([](double v) { return v; }, 0.5, 0, 1, 1e-6);
    EXPECT_NEAR(x, 0.5, 1e-6);
}

TEST(BisectMonotone, RateInversion) {
    auto t = [](double p) { return 1.0 / std::log2(1.0 + p); };
    EXPECT_NEAR(bisect_monotone(t, 1.0, 0.01, 10, 1e-9), 1.0, 1e-8);
}

TEST(BisectMonotone, DecreasingMirrorsIncreasing) {
    const double inc = bisect_monotone([](double v) { return v * v; }, 2.0, 0, 3, 1e-10);
    const double dec = bisect_monotone([](double v) { return -v * v; }, -2.0, 0, 3, 1e-10);
    EXPECT_NEAR(inc, dec, 1e-10);
    EXPECT_NEAR(inc, std::sqrt(2.0), 1e-9);
}

TEST(BisectMonotone, IterationBoundAndBracket) {
    for (double tol : {1e-2, 1e-5, 1e-9, 1e-12}) {
        int calls = 0;
        bisect_monotone([&](double v) { ++calls; return v; }, 0.3, 0, 1, tol);
        EXPECT_LE(calls - 2, static_cast<int>(std::ceil(std::log2(1.0 / tol))));
    }
    EXPECT_THROW(bisect_monotone([](double v) { return v; }, 5, 0, 1, 1e-6), InvalidArgument);
}

TEST(SolveDenseLinear, Cases) {
    const RVec b = RVec::Random(3);
    EXPECT_LE((solve_dense_linear(RMat(RMat::Identity(3, 3)), b) - b).norm(), 1e-15);
    RMat a(2, 2);
    a << 2, 0, 0, 4;
    RVec rhs(2);
    rhs << 2, 4;
    const RVec x = solve_dense_linear(a, rhs);
    EXPECT_NEAR(x(0), 1, 1e-15);
    EXPECT_NEAR(x(1), 1, 1e-15);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 10; ++rep) {
        CMat m(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) m(i, j) = cplx(nd(rng), nd(rng));
        m += 6.0 * CMat::Identity(6, 6);
        CVec v = complex_gaussian(6, rng);
        const CVec sol = solve_dense_linear(m, v);
        EXPECT_LE((m * sol - v).norm(), 1e-10 * (m.norm() * sol.norm() + v.norm()));
    }
    EXPECT_THROW(solve_dense_linear(RMat(RMat::Zero(2, 2)), rhs), NumericError);
}

TEST(GaussianRandomize, RankOneRecovery) {
    std::mt19937_64 rng(1);
    CVec v(4);
    v << cplx(1, 0), cplx(0, 1), cplx(-0.5, 0.2), cplx(0.3, -0.7);
    const CMat x = v * v.adjoint();
    auto proj = [](const CVec& c) { return CVec(c.normalized()); };
    const CVec vn = v.normalized();
    auto score = [&](const CVec& c) { return std::norm(vn.dot(c)); };
    const auto r = gaussian_randomize(x, 50, proj, score, rng);
    EXPECT_GE(r.score, score(vn) * (1 - 1e-9));
}

TEST(GaussianRandomize, MoreCandidatesNeverWorse) {
    CMat x(2, 2);
    x << 1.0, cplx(0.3, 0.2), cplx(0.3, -0.2), 1.0;
    CMat w(2, 2);
    w << 0.2, cplx(0.5, 0.1), cplx(0.5, -0.1), 1.3;
    auto proj = [](const CVec& c) {
        CVec o(c.size());
        for (Eigen::Index i = 0; i < c.size(); ++i) o(i) = std::abs(c(i)) > 0 ? c(i) / std::abs(c(i)) : cplx(1.0);
        return o;
    };
    auto score = [&](const CVec& c) { return (c.adjoint() * w * c)(0, 0).real(); };
    std::mt19937_64 r1(4), r2(4);
    const auto one = gaussian_randomize(x, 1, proj, score, r1);
    const auto many = gaussian_randomize(x, 500, proj, score, r2);
    EXPECT_GE(many.score, one.score);
    for (Eigen::Index i = 0; i < 2; ++i) EXPECT_NEAR(std::abs(many.vec(i)), 1.0, 1e-12);
}

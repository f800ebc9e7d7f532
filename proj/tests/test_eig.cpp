#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "kernel_oracle.hpp"
#include "starfl/kernel/eig.hpp"

using namespace starfl;
using starfl::kernel::hermitian_eig;
using starfl::kernel::hermitian_eig_max;
using namespace starfl::oracle;

TEST(HermitianEig, DiagonalCase) {
    CMat h = CMat::Zero(2, 2);
    h(0, 0) = 2;
    h(1, 1) = 1;
    auto r = hermitian_eig_max(h);
    EXPECT_NEAR(r.lambda, 2.0, 1e-14);
    EXPECT_NEAR(std::abs(r.u(0)), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(r.u(1)), 0.0, 1e-14);
}

TEST(HermitianEig, DegenerateIdentity) {
    auto r = hermitian_eig_max(CMat::Identity(3, 3));
    EXPECT_NEAR(r.lambda, 1.0, 1e-14);
    EXPECT_NEAR(r.u.norm(), 1.0, 1e-14);
}

TEST(HermitianEig, RejectsNonHermitian) {
    CMat h = CMat::Zero(2, 2);
    h(0, 1) = 1.0;
    EXPECT_THROW(hermitian_eig_max(h), InvalidArgument);
}

TEST(HermitianEig, MatchesCharacteristicPolynomialRoots) {
    std::mt19937_64 rng(11);
    for (int inst = 0; inst < 25; ++inst) {
        const CMat h = random_hermitian(4, rng);
        const double bound = h.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
        const auto roots = poly_roots(char_poly(h), bound);
        ASSERT_EQ(roots.size(), 4u) << "instance " << inst;
        const auto e = hermitian_eig(h);
        for (int i = 0; i < 4; ++i) EXPECT_NEAR(e.values(i), roots[i], 1e-8) << "instance " << inst;
    }
}

TEST(HermitianEig, ResidualAndRayleighQuotient) {
    std::mt19937_64 rng(5);
    for (int n : {1, 2, 5, 16, 33}) {
        const CMat h = random_hermitian(n, rng);
        const auto r = hermitian_eig_max(h);
        EXPECT_LE((h * r.u - r.lambda * r.u).norm(), 1e-8 * h.norm());
        EXPECT_NEAR(r.u.norm(), 1.0, 1e-12);
        const double rq = (r.u.adjoint() * h * r.u)(0, 0).real();
        EXPECT_NEAR(rq, r.lambda, 1e-10 * std::max(1.0, std::abs(r.lambda)));
        const auto full = hermitian_eig(h);
        for (int i = 1; i < n; ++i) EXPECT_GE(full.values(i - 1), full.values(i));
        EXPECT_LE((full.vectors.adjoint() * full.vectors - CMat::Identity(n, n)).norm(), 1e-10);
    }
}

TEST(HermitianEig, RankOneLineOfSight) {
    CVec a(6);
    for (int i = 0; i < 6; ++i) a(i) = std::polar(1.0, 0.7 * i);
    const CMat h = a * a.adjoint();
    const auto r = hermitian_eig_max(h);
    EXPECT_NEAR(r.lambda, 6.0, 1e-12);
    EXPECT_NEAR(std::abs(a.dot(r.u)), std::sqrt(6.0), 1e-12);
}

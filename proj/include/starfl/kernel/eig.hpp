#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "starfl/common.hpp"

namespace starfl::kernel {

struct HermitianEig {
    RVec values;   // descending
    CMat vectors;  // column i pairs with values(i)
};

struct EigMax {
    double lambda;
    CVec u;
};

inline double hermitian_asymmetry(const CMat& h) {
    const double scale = std::max(h.norm(), 1e-300);
    return (h - h.adjoint()).norm() / scale;
}

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Each rotation first removes the phase of the pivot entry and
/// then applies a real Givens rotation, so the iteration is the real
/// symmetric Jacobi method in disguise and converges for any spectrum.
inline HermitianEig hermitian_eig(const CMat& h, double asym_tol = 1e-10) {
    require(h.rows() == h.cols(), "hermitian_eig: matrix must be square");
    const Eigen::Index n = h.rows();
    if (n == 0) return {RVec(0), CMat(0, 0)};
    if (hermitian_asymmetry(h) > asym_tol)
        throw InvalidArgument("hermitian_eig: matrix is not Hermitian");

    CMat a = 0.5 * (h + h.adjoint());
    CMat v = CMat::Identity(n, n);
    const double total = std::max(a.norm(), 1e-300);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        if (std::sqrt(2.0 * off) <= 1e-15 * total) break;

        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag <= 1e-300) continue;
                const cplx phase = apq / mag;  // e^{i phi}
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * mag);
                const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // J = diag(1, conj(phase)) * [[c, s], [-s, c]] restricted to (p, q).
                const cplx jpp = c, jpq = s;
                const cplx jqp = -s * std::conj(phase), jqq = c * std::conj(phase);
                for (Eigen::Index r = 0; r < n; ++r) {  // A <- A J
                    const cplx arp = a(r, p), arq = a(r, q);
                    a(r, p) = arp * jpp + arq * jqp;
                    a(r, q) = arp * jpq + arq * jqq;
                }
                for (Eigen::Index r = 0; r < n; ++r) {  // A <- J^H A
                    const cplx apr = a(p, r), aqr = a(q, r);
                    a(p, r) = std::conj(jpp) * apr + std::conj(jqp) * aqr;
                    a(q, r) = std::conj(jpq) * apr + std::conj(jqq) * aqr;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                for (Eigen::Index r = 0; r < n; ++r) {  // V <- V J
                    const cplx vrp = v(r, p), vrq = v(r, q);
                    v(r, p) = vrp * jpp + vrq * jqp;
                    v(r, q) = vrp * jpq + vrq * jqq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() > a(y, y).real(); });
    HermitianEig out{RVec(n), CMat(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = a(order[i], order[i]).real();
        out.vectors.col(i) = v.col(order[i]).normalized();
    }
    return out;
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
inline EigMax hermitian_eig_max(const CMat& h) {
    require(h.rows() > 0, "hermitian_eig_max: empty matrix");
    auto e = hermitian_eig(h);
    return {e.values(0), e.vectors.col(0)};
}

/// Cholesky-like factor F with F F^H = max(H, 0), negative eigenvalues clipped.
inline CMat psd_factor(const CMat& h) {
    auto e = hermitian_eig(h, 1e-8);
    CMat f = e.vectors;
    for (Eigen::Index i = 0; i < f.cols(); ++i) f.col(i) *= std::sqrt(std::max(e.values(i), 0.0));
    return f;
}

}  // namespace starfl::kernel

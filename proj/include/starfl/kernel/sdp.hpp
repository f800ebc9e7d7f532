#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "starfl/common.hpp"
#include "starfl/kernel/eig.hpp"

namespace starfl::kernel {

enum class Sense { Eq, Le, Ge };

/// Coefficient of one Hermitian block inside a linear functional.
struct SdpTerm {
    int block;
    CMat coeff;
};

struct SdpConstraint {
    std::vector<SdpTerm> terms;
    std::vector<std::pair<int, double>> scalar_terms;  // (scalar index, coefficient)
    Sense sense = Sense::Eq;
    double rhs = 0.0;
};

/// maximize  sum_b Tr(C_b X_b) + sum_j c_j s_j
/// s.t.      sum_b Tr(A_b X_b) + sum_j a_j s_j  {=,<=,>=}  rhs
///           X_b Hermitian PSD, s_j >= 0.
struct SdpProblem {
    std::vector<int> dims;
    int n_scalars = 0;
    std::vector<SdpTerm> objective;
    std::vector<std::pair<int, double>> objective_scalars;
    std::vector<SdpConstraint> constraints;

    int add_block(int n) {
        require(n >= 1, "SdpProblem: block dimension must be positive");
        dims.push_back(n);
        return static_cast<int>(dims.size()) - 1;
    }
    int add_scalar() { return n_scalars++; }

    /// diag(X_b1) + diag(X_b2) = value; pass b2 < 0 for diag(X_b1) = value.
    void add_diag_constraint(int b1, int b2, double value = 1.0) {
        const int n = dims.at(static_cast<std::size_t>(b1));
        if (b2 >= 0) require(dims.at(static_cast<std::size_t>(b2)) == n, "add_diag_constraint: size mismatch");
        for (int i = 0; i < n; ++i) {
            SdpConstraint c;
            CMat e = CMat::Zero(n, n);
            e(i, i) = 1.0;
            c.terms.push_back({b1, e});
            if (b2 >= 0) c.terms.push_back({b2, e});
            c.rhs = value;
            constraints.push_back(std::move(c));
        }
    }
};

struct SdpSolution {
    std::vector<CMat> X;
    RVec s;
    double objective = 0.0;       // primal value in the maximize convention
    double dual_objective = 0.0;  // matching dual bound
    double gap = 0.0;             // |primal - dual|
    double residual = 0.0;        // max absolute constraint residual
    int iterations = 0;
};

class SdpInfeasible : public Error {
public:
    using Error::Error;
};

class SdpUnbounded : public Error {
public:
    using Error::Error;
};

class SdpNotConverged : public Error {
public:
    SdpNotConverged(const std::string& what, SdpSolution best_iterate)
        : Error(what), best(std::move(best_iterate)) {}
    SdpSolution best;
};

struct SdpOptions {
    double tol = 1e-9;
    int max_iter = 120;
    std::ostream* trace = nullptr;  // iteration CSV when set
};

namespace detail {

struct Triplet {
    int r, c;
    double v;
};

struct RTerm {
    int block;
    RMat dense;
    std::vector<Triplet> sp;
    bool sparse = false;
};

struct RRow {
    std::vector<RTerm> terms;
    double b = 0.0;
};

inline RMat embed(const CMat& a) {
    const auto n = a.rows();
    RMat r(2 * n, 2 * n);
    r << a.real(), -a.imag(), a.imag(), a.real();
    return r;
}

inline CMat unembed(const RMat& y) {
    const auto n = y.rows() / 2;
    CMat x(n, n);
    x.real() = 0.5 * (y.topLeftCorner(n, n) + y.bottomRightCorner(n, n));
    x.imag() = 0.5 * (y.bottomLeftCorner(n, n) - y.topRightCorner(n, n));
    return x;
}

inline RTerm make_term(int block, RMat m) {
    RTerm t{block, std::move(m), {}, false};
    std::vector<Triplet> nz;
    for (Eigen::Index c = 0; c < t.dense.cols(); ++c)
        for (Eigen::Index r = 0; r < t.dense.rows(); ++r)
            if (t.dense(r, c) != 0.0) nz.push_back({static_cast<int>(r), static_cast<int>(c), t.dense(r, c)});
    if (nz.size() <= static_cast<std::size_t>(2 * t.dense.rows())) {
        t.sparse = true;
        t.sp = std::move(nz);
    }
    return t;
}

inline double inner(const RTerm& t, const RMat& x) {
    if (!t.sparse) return t.dense.cwiseProduct(x).sum();
    double s = 0.0;
    for (const auto& e : t.sp) s += e.v * x(e.r, e.c);
    return s;
}

inline void add_scaled(RMat& acc, const RTerm& t, double s) {
    if (!t.sparse) {
        acc.noalias() += s * t.dense;
        return;
    }
    for (const auto& e : t.sp) acc(e.r, e.c) += s * e.v;
}

/// X * A * W for a term A (W = Z^{-1}).
inline RMat sandwich(const RMat& x, const RTerm& t, const RMat& w) {
    if (!t.sparse) return x * (t.dense * w);
    RMat out = RMat::Zero(x.rows(), w.cols());
    for (const auto& e : t.sp) out.noalias() += e.v * x.col(e.r) * w.row(e.c);
    return out;
}

inline double max_step(const RMat& x, const RMat& dx) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (x.rows() == 1) return dx(0, 0) < 0 ? -x(0, 0) / dx(0, 0) : inf;
    Eigen::LLT<RMat> llt(x);
    if (llt.info() != Eigen::Success) return 0.0;
    RMat a = llt.matrixL().solve(dx);
    RMat s = llt.matrixL().solve(a.transpose());
    s = 0.5 * (s + s.transpose());
    const double lmin = Eigen::SelfAdjointEigenSolver<RMat>(s, Eigen::EigenvaluesOnly).eigenvalues()(0);
    return lmin >= 0 ? inf : -1.0 / lmin;
}

inline double blocks_inner(const std::vector<RMat>& a, const std::vector<RMat>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i]).sum();
    return s;
}

inline double blocks_norm(const std::vector<RMat>& a) { return std::sqrt(blocks_inner(a, a)); }

}  // namespace detail

/// Infeasible primal-dual path-following method (HKM direction, Mehrotra
/// predictor-corrector) on the real embedding of the block problem.
inline SdpSolution solve_sdp(const SdpProblem& p, const SdpOptions& opt = {}) {
    using namespace detail;
    const int nb = static_cast<int>(p.dims.size());
    require(nb + p.n_scalars > 0, "solve_sdp: no variables");

    auto check_block = [&](const SdpTerm& t) {
        require(t.block >= 0 && t.block < nb, "solve_sdp: block index out of range");
        const int n = p.dims[static_cast<std::size_t>(t.block)];
        require(t.coeff.rows() == n && t.coeff.cols() == n, "solve_sdp: coefficient dimension mismatch");
        require(hermitian_asymmetry(t.coeff) <= 1e-10, "solve_sdp: coefficient is not Hermitian");
    };

    // Real blocks: complex blocks first, then user scalars, then slacks.
    std::vector<int> rdim;
    for (int d : p.dims) rdim.push_back(2 * d);
    for (int j = 0; j < p.n_scalars; ++j) rdim.push_back(1);

    std::vector<RRow> rows;
    for (const auto& c : p.constraints) {
        RRow r;
        r.b = c.rhs;
        for (const auto& t : c.terms) {
            check_block(t);
            r.terms.push_back(make_term(t.block, 0.5 * embed(0.5 * (t.coeff + t.coeff.adjoint()))));
        }
        for (const auto& [j, a] : c.scalar_terms) {
            require(j >= 0 && j < p.n_scalars, "solve_sdp: scalar index out of range");
            r.terms.push_back(make_term(nb + j, RMat::Constant(1, 1, a)));
        }
        if (c.sense != Sense::Eq) {
            rdim.push_back(1);
            const double sgn = c.sense == Sense::Le ? 1.0 : -1.0;
            r.terms.push_back(make_term(static_cast<int>(rdim.size()) - 1, RMat::Constant(1, 1, sgn)));
        }
        rows.push_back(std::move(r));
    }
    const int nblk = static_cast<int>(rdim.size());
    const int m = static_cast<int>(rows.size());

    // Minimize -objective.
    std::vector<RMat> C(static_cast<std::size_t>(nblk));
    for (int b = 0; b < nblk; ++b) C[b] = RMat::Zero(rdim[b], rdim[b]);
    for (const auto& t : p.objective) {
        check_block(t);
        C[t.block] -= 0.5 * embed(0.5 * (t.coeff + t.coeff.adjoint()));
    }
    for (const auto& [j, c] : p.objective_scalars) {
        require(j >= 0 && j < p.n_scalars, "solve_sdp: scalar index out of range");
        C[nb + j](0, 0) -= c;
    }

    RVec b(m);
    for (int i = 0; i < m; ++i) b(i) = rows[i].b;

    // Per-block index of (row, term).
    std::vector<std::vector<std::pair<int, int>>> by_block(static_cast<std::size_t>(nblk));
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < static_cast<int>(rows[i].terms.size()); ++k)
            by_block[rows[i].terms[k].block].push_back({i, k});

    auto A_of = [&](const std::vector<RMat>& x) {
        RVec v = RVec::Zero(m);
        for (int i = 0; i < m; ++i)
            for (const auto& t : rows[i].terms) v(i) += inner(t, x[t.block]);
        return v;
    };
    auto AT_of = [&](const RVec& y) {
        std::vector<RMat> out(static_cast<std::size_t>(nblk));
        for (int bb = 0; bb < nblk; ++bb) out[bb] = RMat::Zero(rdim[bb], rdim[bb]);
        for (int i = 0; i < m; ++i)
            for (const auto& t : rows[i].terms) add_scaled(out[t.block], t, y(i));
        return out;
    };

    double n_total = 0.0;
    for (int d : rdim) n_total += d;
    double norm_c = blocks_norm(C);
    double max_a = 0.0;
    double xi = 10.0;
    for (int i = 0; i < m; ++i) {
        double na = 0.0;
        for (const auto& t : rows[i].terms) na += t.sparse ? [&] {
            double s = 0.0;
            for (const auto& e : t.sp) s += e.v * e.v;
            return s;
        }() : t.dense.squaredNorm();
        na = std::sqrt(na);
        max_a = std::max(max_a, na);
        xi = std::max(xi, std::sqrt(n_total) * (1.0 + std::abs(b(i))) / (1.0 + na));
    }
    const double zeta = std::max({10.0, std::sqrt(n_total), max_a, norm_c});

    std::vector<RMat> X(static_cast<std::size_t>(nblk)), Z(static_cast<std::size_t>(nblk));
    for (int bb = 0; bb < nblk; ++bb) {
        X[bb] = xi * RMat::Identity(rdim[bb], rdim[bb]);
        Z[bb] = zeta * RMat::Identity(rdim[bb], rdim[bb]);
    }
    RVec y = RVec::Zero(m);
    const double norm_b = b.norm();

    auto pack = [&](int it, double pobj, double dobj, const RVec& rp) {
        SdpSolution s;
        for (int bb = 0; bb < nb; ++bb) s.X.push_back(unembed(X[bb]));
        s.s = RVec(p.n_scalars);
        for (int j = 0; j < p.n_scalars; ++j) s.s(j) = X[nb + j](0, 0);
        s.objective = -pobj;
        s.dual_objective = -dobj;
        s.gap = std::abs(pobj - dobj);
        s.residual = m > 0 ? rp.cwiseAbs().maxCoeff() : 0.0;
        s.iterations = it;
        return s;
    };

    if (opt.trace) *opt.trace << "iter,primal_obj,dual_obj,gap,primal_inf,dual_inf,mu\n";

    SdpSolution best;
    double best_err = std::numeric_limits<double>::infinity();

    for (int it = 0; it <= opt.max_iter; ++it) {
        const RVec rp = b - A_of(X);
        std::vector<RMat> Rd = AT_of(y);
        for (int bb = 0; bb < nblk; ++bb) Rd[bb] = C[bb] - Z[bb] - Rd[bb];
        const double pobj = blocks_inner(C, X);
        const double dobj = b.dot(y);
        const double mu = blocks_inner(X, Z) / n_total;
        const double relp = rp.norm() / (1.0 + norm_b);
        const double reld = blocks_norm(Rd) / (1.0 + norm_c);
        const double relg = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        if (opt.trace)
            *opt.trace << it << ',' << -pobj << ',' << -dobj << ',' << std::abs(pobj - dobj) << ',' << relp << ','
                       << reld << ',' << mu << '\n';

        const double err = std::max({relp, reld, relg});
        if (err < best_err) {
            best_err = err;
            best = pack(it, pobj, dobj, rp);
        }
        if (relp <= opt.tol && reld <= opt.tol && relg <= opt.tol) return pack(it, pobj, dobj, rp);

        const double xnorm = blocks_norm(X);
        const double scale = 1.0 + norm_c + norm_b;
        if (dobj > 1e10 * scale && reld <= 1e-6 * (1.0 + dobj / scale))
            throw SdpInfeasible("solve_sdp: primal infeasible (dual ray detected)");
        if (xnorm > 1e10 * scale && pobj < -1e10 * scale)
            throw SdpUnbounded("solve_sdp: objective unbounded");
        if (it == opt.max_iter) break;

        std::vector<RMat> Zinv(static_cast<std::size_t>(nblk));
        for (int bb = 0; bb < nblk; ++bb) {
            Eigen::LLT<RMat> llt(Z[bb]);
            if (llt.info() != Eigen::Success) throw SdpNotConverged("solve_sdp: dual slack lost definiteness", best);
            Zinv[bb] = llt.solve(RMat::Identity(rdim[bb], rdim[bb]));
        }

        RMat M = RMat::Zero(m, m);
        for (int bb = 0; bb < nblk; ++bb) {
            const auto& list = by_block[bb];
            for (std::size_t u = 0; u < list.size(); ++u) {
                const auto& ti = rows[list[u].first].terms[list[u].second];
                const RMat W = sandwich(X[bb], ti, Zinv[bb]);
                for (std::size_t v = 0; v < list.size(); ++v) {
                    const auto& tj = rows[list[v].first].terms[list[v].second];
                    M(list[u].first, list[v].first) += inner(tj, W);
                }
            }
        }
        M = 0.5 * (M + M.transpose());
        Eigen::LLT<RMat> mchol(M);
        Eigen::LDLT<RMat> mldlt;
        const bool use_llt = mchol.info() == Eigen::Success;
        if (!use_llt) mldlt.compute(M + 1e-14 * M.diagonal().cwiseAbs().maxCoeff() * RMat::Identity(m, m));

        auto direction = [&](const std::vector<RMat>& R, std::vector<RMat>& dX, std::vector<RMat>& dZ, RVec& dy) {
            std::vector<RMat> T(static_cast<std::size_t>(nblk));
            for (int bb = 0; bb < nblk; ++bb) T[bb] = (R[bb] - X[bb] * Rd[bb]) * Zinv[bb];
            const RVec rhs = rp - A_of(T);
            dy = use_llt ? RVec(mchol.solve(rhs)) : RVec(mldlt.solve(rhs));
            const auto aty = AT_of(dy);
            dX.resize(static_cast<std::size_t>(nblk));
            dZ.resize(static_cast<std::size_t>(nblk));
            for (int bb = 0; bb < nblk; ++bb) {
                dZ[bb] = Rd[bb] - aty[bb];
                RMat d = (R[bb] - X[bb] * dZ[bb]) * Zinv[bb];
                dX[bb] = 0.5 * (d + d.transpose());
            }
        };
        auto steps = [&](const std::vector<RMat>& dX, const std::vector<RMat>& dZ) {
            double ap = 1.0 / 0.95, ad = 1.0 / 0.95;
            for (int bb = 0; bb < nblk; ++bb) {
                ap = std::min(ap, max_step(X[bb], dX[bb]));
                ad = std::min(ad, max_step(Z[bb], dZ[bb]));
            }
            return std::pair{std::min(1.0, 0.95 * ap), std::min(1.0, 0.95 * ad)};
        };

        std::vector<RMat> R(static_cast<std::size_t>(nblk)), dXa, dZa, dX, dZ;
        RVec dya, dy;
        for (int bb = 0; bb < nblk; ++bb) R[bb] = -X[bb] * Z[bb];
        direction(R, dXa, dZa, dya);
        auto [apa, ada] = steps(dXa, dZa);
        double mu_aff = 0.0;
        for (int bb = 0; bb < nblk; ++bb)
            mu_aff += (X[bb] + apa * dXa[bb]).cwiseProduct(Z[bb] + ada * dZa[bb]).sum();
        mu_aff /= n_total;
        const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);
        for (int bb = 0; bb < nblk; ++bb)
            R[bb] = sigma * mu * RMat::Identity(rdim[bb], rdim[bb]) - X[bb] * Z[bb] - dXa[bb] * dZa[bb];
        direction(R, dX, dZ, dy);
        auto [ap, ad] = steps(dX, dZ);
        for (int bb = 0; bb < nblk; ++bb) {
            X[bb] += ap * dX[bb];
            Z[bb] += ad * dZ[bb];
            X[bb] = 0.5 * (X[bb] + X[bb].transpose());
            Z[bb] = 0.5 * (Z[bb] + Z[bb].transpose());
        }
        y += ad * dy;
    }
    throw SdpNotConverged("solve_sdp: iteration cap reached", best);
}

}  // namespace starfl::kernel

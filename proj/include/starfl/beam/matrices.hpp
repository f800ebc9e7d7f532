#pragma once

#include <array>
#include <complex>
#include <vector>

#include "starfl/channel/channel.hpp"
#include "starfl/common.hpp"
#include "starfl/model.hpp"

namespace starfl::beam {

/// Lambda = diag(g) G V_k G^H diag(g)^H for a (possibly relaxed) V_k = v v^H.
inline CMat build_lambda(const PhaseChannels& ch, const CMat& Vk, int k, Side s) {
    require(Vk.rows() == ch.G.cols() && Vk.cols() == ch.G.cols(), "build_lambda: V_k must be M x M");
    const CMat DG = ch.g(s, k).asDiagonal() * ch.G;
    return DG * Vk * DG.adjoint();
}

inline CMat build_lambda(const PhaseChannels& ch, const CVec& v, int k, Side s) {
    require(v.size() == ch.G.cols(), "build_lambda: beamformer length mismatch");
    const CVec d = ch.g(s, k).cwiseProduct(ch.G * v);
    return d * d.adjoint();
}

/// Gamma = G^H diag(g)^H Phi diag(g) G for a (possibly relaxed) Phi = phi phi^H.
inline CMat build_gamma(const PhaseChannels& ch, const CMat& Phi, int k, Side s) {
    require(Phi.rows() == ch.G.rows() && Phi.cols() == ch.G.rows(), "build_gamma: Phi must be N x N");
    const CMat DG = ch.g(s, k).asDiagonal() * ch.G;
    return DG.adjoint() * Phi * DG;
}

inline CMat build_gamma(const PhaseChannels& ch, const CVec& phi, int k, Side s) {
    require(phi.size() == ch.G.rows(), "build_gamma: profile length mismatch");
    const CVec c = ch.G.adjoint() * ch.g(s, k).conjugate().cwiseProduct(phi);
    return c * c.adjoint();
}

/// Row vector h_k = sum_Y phi_Y^H diag(g_Y,k) G.
inline Eigen::RowVectorXcd cascaded_row(const PhaseChannels& ch, const PhaseProfile& p, int k) {
    Eigen::RowVectorXcd h = Eigen::RowVectorXcd::Zero(ch.G.cols());
    for (Side s : {Side::t, Side::r}) {
        const CVec w = p.side(s).conjugate().cwiseProduct(ch.g(s, k));
        h += w.transpose() * ch.G;
    }
    return h;
}

/// Which RIS elements each side may use in one optimization, and whether
/// the two sides share the amplitude-split constraint.
struct Layout {
    Mode mode = Mode::ES;
    std::array<std::vector<int>, 2> idx;  // by Side
    bool coupled = false;

    bool active(Side s) const { return !idx[static_cast<int>(s)].empty(); }
    const std::vector<int>& of(Side s) const { return idx[static_cast<int>(s)]; }
};

/// ES: both sides on all elements, coupled. TS: only `side`, unit modulus.
/// CONV: reflect-only on the first ceil(N/2) elements, transmit-only on the rest.
inline Layout make_layout(Mode m, int N, Side side = Side::t) {
    Layout l;
    l.mode = m;
    std::vector<int> all(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) all[i] = i;
    switch (m) {
        case Mode::ES:
            l.idx = {all, all};
            l.coupled = true;
            break;
        case Mode::TS:
            l.idx[static_cast<int>(side)] = all;
            break;
        case Mode::CONV: {
            const int nr = conv_reflect_count(N);
            for (int i = 0; i < N; ++i) l.idx[i < nr ? 1 : 0].push_back(i);
            break;
        }
    }
    return l;
}

inline CMat restrict_to(const CMat& a, const std::vector<int>& idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    CMat out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = a(idx[i], idx[j]);
    return out;
}

inline CMat expand_from(const CMat& a, const std::vector<int>& idx, int N) {
    CMat out = CMat::Zero(N, N);
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) out(idx[i], idx[j]) = a(i, j);
    return out;
}

}  // namespace starfl::beam

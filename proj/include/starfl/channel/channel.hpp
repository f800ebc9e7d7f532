#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "starfl/common.hpp"
#include "starfl/config.hpp"
#include "starfl/kernel/randomize.hpp"
#include "starfl/model.hpp"

namespace starfl {

struct Point2 {
    double x = 0.0, y = 0.0;
    double norm() const { return std::hypot(x, y); }
};

struct Topology {
    Point2 ap{-20.0, 20.0};
    Point2 ris{0.0, 0.0};
    std::vector<Point2> users;  // group A first, then group B
    std::vector<Side> group;    // Side::t for group A, Side::r for group B
};

struct PhaseChannels {
    CMat G;                  // N x M, AP -> RIS
    std::vector<CVec> g_t;   // RIS -> user, transmission side
    std::vector<CVec> g_r;   // RIS -> user, reflection side

    const CVec& g(Side s, int k) const { return s == Side::t ? g_t[k] : g_r[k]; }
};

struct ChannelSet {
    std::array<PhaseChannels, 3> phase;
    PhaseChannels& operator[](Phase p) { return phase[static_cast<int>(p)]; }
    const PhaseChannels& operator[](Phase p) const { return phase[static_cast<int>(p)]; }
};

using FairnessMatrix = RMat;

inline constexpr double kUserRadius = 20.0;

template <typename Rng>
Topology generate_topology(const SystemConfig& c, Rng& rng) {
    require(c.K_t >= 1 && c.K_r >= 1, "generate_topology: need at least one user per group");
    Topology t;
    std::uniform_real_distribution<double> qa(0.0, 90.0), qb(180.0, 270.0);
    auto place = [&](double deg, Side s) {
        const double th = deg * std::numbers::pi / 180.0;
        t.users.push_back({kUserRadius * std::cos(th), kUserRadius * std::sin(th)});
        t.group.push_back(s);
    };
    for (int k = 0; k < c.K_t; ++k) place(qa(rng), Side::t);
    for (int k = 0; k < c.K_r; ++k) place(qb(rng), Side::r);
    return t;
}

inline double path_loss_linear(double distance_m, double rho, double L0_dB) {
    require(distance_m >= 1.0, "path_loss_linear: distance below the 1 m reference");
    return std::pow(10.0, -L0_dB / 10.0) * std::pow(distance_m, -rho);
}

/// Receive noise power in W over the configured bandwidth.
inline double noise_power(const SystemConfig& c) {
    return std::pow(10.0, (c.sigma0_dBm_per_Hz + 10.0 * std::log10(c.B) - 30.0) / 10.0);
}

/// Half-wavelength ULA response exp(j*pi*n*sin(theta)), n = 0..n-1.
inline CVec steering(int n, double theta) {
    CVec a(n);
    for (int i = 0; i < n; ++i) a(i) = std::polar(1.0, std::numbers::pi * i * std::sin(theta));
    return a;
}

namespace detail {

inline std::pair<double, double> rician_weights(double kf) {
    if (std::isinf(kf)) return {1.0, 0.0};
    return {std::sqrt(kf / (kf + 1.0)), std::sqrt(1.0 / (kf + 1.0))};
}

template <typename Rng>
CMat rician(const CMat& los, double pl, double kf, Rng& rng) {
    const auto [wl, wn] = rician_weights(kf);
    CMat nl(los.rows(), los.cols());
    for (Eigen::Index j = 0; j < los.cols(); ++j) nl.col(j) = kernel::complex_gaussian(los.rows(), rng);
    return std::sqrt(pl) * (wl * los + wn * nl);
}

}  // namespace detail

/// Rician channels for all three phases, drawn independently per phase.
template <typename Rng>
ChannelSet sample_channels(const Topology& topo, const SystemConfig& c, Rng& rng) {
    const int K = static_cast<int>(topo.users.size());
    require(K >= 1 && topo.group.size() == topo.users.size(), "sample_channels: invalid topology");
    const Point2 d_ap{topo.ap.x - topo.ris.x, topo.ap.y - topo.ris.y};
    const double th_ris_ap = std::atan2(d_ap.y, d_ap.x);
    const double th_ap_ris = std::atan2(-d_ap.y, -d_ap.x);
    const CMat G_los = steering(c.N, th_ris_ap) * steering(c.M, th_ap_ris).adjoint();
    const double pl_ap = path_loss_linear(d_ap.norm(), c.rho_ap, c.L0_dB);

    ChannelSet cs;
    for (Phase ph : kPhases) {
        auto& pc = cs[ph];
        pc.G = detail::rician(G_los, pl_ap, c.rician_K, rng);
        pc.g_t.assign(K, CVec::Zero(c.N));
        pc.g_r.assign(K, CVec::Zero(c.N));
        for (int k = 0; k < K; ++k) {
            const Point2 d{topo.users[k].x - topo.ris.x, topo.users[k].y - topo.ris.y};
            const CMat los = steering(c.N, std::atan2(d.y, d.x));
            const CVec g = detail::rician(los, path_loss_linear(d.norm(), c.rho_user, c.L0_dB), c.rician_K, rng).col(0);
            (topo.group[k] == Side::t ? pc.g_t[k] : pc.g_r[k]) = g;
        }
    }
    return cs;
}

/// z = sum_Y |phi_Y^H diag(g_Y) G v|^2.
inline double effective_gain(const PhaseChannels& ch, const PhaseProfile& prof, const CVec& v, int k) {
    const auto n = ch.G.rows();
    require(prof.t.size() == n && prof.r.size() == n, "effective_gain: profile length mismatch");
    require(v.size() == ch.G.cols(), "effective_gain: beamformer length mismatch");
    require(k >= 0 && k < static_cast<int>(ch.g_t.size()), "effective_gain: user index out of range");
    const CVec Gv = ch.G * v;
    double z = 0.0;
    for (Side s : {Side::t, Side::r}) {
        const cplx amp = prof.side(s).dot(ch.g(s, k).cwiseProduct(Gv));  // conj(phi)^T (g .* Gv)
        z += std::norm(amp);
    }
    return z;
}

inline double effective_gain(const ChannelSet& cs, const StarProfile& prof, const BeamformingSet& beam, Phase ph,
                             int k) {
    const CMat& V = beam[ph];
    require(k >= 0 && k < V.cols(), "effective_gain: user index out of range");
    return effective_gain(cs[ph], prof[ph], V.col(k), k);
}

inline FairnessMatrix fairness_targets(const Topology& topo) {
    const auto K = static_cast<Eigen::Index>(topo.users.size());
    FairnessMatrix b(K, K);
    for (Eigen::Index i = 0; i < K; ++i)
        for (Eigen::Index j = 0; j < K; ++j) {
            const double di = Point2{topo.users[i].x - topo.ris.x, topo.users[i].y - topo.ris.y}.norm();
            const double dj = Point2{topo.users[j].x - topo.ris.x, topo.users[j].y - topo.ris.y}.norm();
            b(i, j) = di / dj;
        }
    return b;
}

namespace detail {

inline nlohmann::json pairs(const CMat& m) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back({m(i, j).real(), m(i, j).imag()});
    return a;
}

}  // namespace detail

/// Phase-tagged channel record; complex entries as row-major [re, im] pairs.
inline nlohmann::json channel_dump(const ChannelSet& cs, int trial) {
    nlohmann::json j;
    j["trial"] = trial;
    for (Phase ph : kPhases) {
        const auto& pc = cs[ph];
        nlohmann::json p;
        p["G"] = {{"rows", pc.G.rows()}, {"cols", pc.G.cols()}, {"data", detail::pairs(pc.G)}};
        for (const char* side : {"g_t", "g_r"}) {
            nlohmann::json users = nlohmann::json::array();
            for (const auto& g : (side[2] == 't' ? pc.g_t : pc.g_r)) users.push_back(detail::pairs(g));
            p[side] = users;
        }
        j[to_string(ph)] = p;
    }
    return j;
}

}  // namespace starfl

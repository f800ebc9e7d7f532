#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "starfl/common.hpp"
#include "starfl/kernel/eig.hpp"

namespace starfl::kernel {

struct RandomizeResult {
    CVec vec;
    double score;
};

/// Standard circularly-symmetric complex Gaussian vector, E|w_i|^2 = 1.
template <typename Rng>
CVec complex_gaussian(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    CVec w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = cplx(nd(rng), nd(rng));
    return w;
}

/// Gaussian randomization: draw xi ~ CN(0, X), project, keep the best score.
/// The principal eigenvector (scaled to the trace of X) is always scored first,
/// so a rank-1 X is recovered exactly.
template <typename Rng>
RandomizeResult gaussian_randomize(const CMat& x, int candidates, const std::function<CVec(const CVec&)>& project,
                                   const std::function<double(const CVec&)>& score, Rng& rng) {
    require(candidates >= 1, "gaussian_randomize: need at least one candidate");
    require(x.rows() == x.cols() && x.rows() > 0, "gaussian_randomize: X must be square");
    const CMat f = psd_factor(x);
    RandomizeResult best{CVec(), -std::numeric_limits<double>::infinity()};
    auto consider = [&](const CVec& raw) {
        CVec c = project(raw);
        const double s = score(c);
        if (s > best.score) best = {std::move(c), s};
    };
    const double trace = std::max(x.trace().real(), 0.0);
    consider(f.col(0).normalized() * std::sqrt(trace));
    for (int i = 1; i < candidates; ++i) consider(f * complex_gaussian(f.cols(), rng));
    if (!best.vec.allFinite()) throw NumericError("gaussian_randomize: projector produced non-finite vector");
    return best;
}

}  // namespace starfl::kernel

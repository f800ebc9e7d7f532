#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

#include <Eigen/LU>

#include "starfl/common.hpp"

namespace starfl::kernel {

/// Solve A x = b by partial-pivot LU. Throws NumericError when A is singular.
template <typename Mat, typename Vec>
Vec solve_dense_linear(const Mat& a, const Vec& b) {
    require(a.rows() == a.cols(), "solve_dense_linear: matrix must be square");
    require(a.rows() == b.rows(), "solve_dense_linear: size mismatch");
    if (a.rows() == 0) return Vec(0);
    Eigen::PartialPivLU<Mat> lu(a);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) throw NumericError("solve_dense_linear: singular matrix");
    Vec x = lu.solve(b);
    if (!x.allFinite()) throw NumericError("solve_dense_linear: non-finite solution");
    return x;
}

/// Smallest grid point lo + i*step in [lo, hi] where `feasible` holds,
/// scanning upward. Throws Infeasible if the range is exhausted.
inline double one_dim_search(const std::function<bool(double)>& feasible, double lo, double hi, double step) {
    require(step > 0, "one_dim_search: step must be positive");
    require(lo <= hi, "one_dim_search: empty range");
    const auto count = static_cast<std::int64_t>(std::floor((hi - lo) / step * (1 + 1e-12)));
    for (std::int64_t i = 0; i <= count; ++i) {
        const double x = lo + static_cast<double>(i) * step;
        if (feasible(x)) return x;
    }
    throw Infeasible("one_dim_search: no feasible grid point");
}

/// Same contract as one_dim_search for monotone predicates, found with
/// exponential then binary search over grid indices. `descending` scans
/// from hi downward and returns the smallest feasible index reached that way.
inline double grid_search_monotone(const std::function<bool(double)>& feasible, double lo, double hi, double step,
                                   bool descending = false) {
    require(step > 0, "grid_search_monotone: step must be positive");
    require(lo <= hi, "grid_search_monotone: empty range");
    const auto count = static_cast<std::int64_t>(std::floor((hi - lo) / step * (1 + 1e-12)));
    auto at = [&](std::int64_t i) { return feasible(lo + static_cast<double>(i) * step); };
    std::int64_t good, bad;  // at(good) true, at(bad) false or -1
    if (!descending) {
        std::int64_t probe = 0, prev = -1, inc = 1;
        while (true) {
            if (at(probe)) break;
            prev = probe;
            if (probe == count) throw Infeasible("grid_search_monotone: no feasible grid point");
            probe = std::min(count, probe + inc);
            inc *= 2;
        }
        good = probe;
        bad = prev;
    } else {
        if (!at(count)) throw Infeasible("grid_search_monotone: no feasible grid point");
        std::int64_t probe = count, prev = count, dec = 1;
        while (true) {
            if (!at(probe)) break;
            prev = probe;
            if (probe == 0) return lo;
            probe = std::max<std::int64_t>(0, probe - dec);
            dec *= 2;
        }
        good = prev;
        bad = probe;
    }
    while (good - bad > 1) {
        const std::int64_t mid = bad + (good - bad) / 2;
        if (at(mid)) good = mid;
        else bad = mid;
    }
    return lo + static_cast<double>(good) * step;
}

/// Bisection for f(x) = target on a bracket where f is monotone (either
/// direction). Returns the midpoint of the final interval of width < tol.
inline double bisect_monotone(const std::function<double(double)>& f, double target, double lo, double hi,
                              double tol) {
    require(tol > 0, "bisect_monotone: tol must be positive");
    require(lo <= hi, "bisect_monotone: empty range");
    const double flo = f(lo) - target, fhi = f(hi) - target;
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if ((flo > 0) == (fhi > 0)) throw InvalidArgument("bisect_monotone: target not bracketed");
    const bool increasing = fhi > 0;
    const int max_it = static_cast<int>(std::ceil(std::log2(std::max((hi - lo) / tol, 1.0))));
    for (int it = 0; it < max_it && hi - lo >= tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid) - target;
        if (fm == 0) return mid;
        if ((fm > 0) == increasing) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// Smallest x in [lo, hi] with pred(x) true for a predicate monotone false->true.
/// Returns hi when pred(hi) is the first true value inside tolerance.
inline double bisect_predicate(const std::function<bool(double)>& pred, double lo, double hi, double tol) {
    if (pred(lo)) return lo;
    if (!pred(hi)) throw Infeasible("bisect_predicate: predicate false on whole range");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (pred(mid)) hi = mid;
        else lo = mid;
    }
    return hi;
}

/// Golden-section minimization of a unimodal function on [lo, hi].
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? c : d;
}

}  // namespace starfl::kernel

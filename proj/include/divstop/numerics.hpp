#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "divstop/errors.hpp"

namespace divstop::numerics {

/// n equally spaced points from lo to hi inclusive. The last point is exactly hi.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> out(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
    out.back() = hi;
    return out;
}

/// Points lo, lo+step, ... up to and including hi (hi is appended when the
/// last regular point falls short of it by more than step/2).
inline std::vector<double> arange_inclusive(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw ArgumentError("arange_inclusive: need step > 0 and hi >= lo");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
    std::vector<double> out;
    out.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + step * static_cast<double>(i));
    out.back() = hi;
    return out;
}

inline bool is_sorted_strict(std::span<const double> v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

/// Root of a continuous f on [lo, hi] with f(lo), f(hi) of opposite signs,
/// located to an absolute bracket width of `tol`.
template <class F>
double bisect_root(F&& f, double lo, double hi, double tol = 1e-12, std::uintmax_t max_iter = 400) {
    if (!(lo < hi)) throw ArgumentError("bisect_root: empty bracket");
    const double flo = f(lo);
    const double fhi = f(hi);
    if (!std::isfinite(flo) || !std::isfinite(fhi))
        throw NumericError("bisect_root: non-finite value at bracket end");
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw NumericError("bisect_root: no sign change on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    auto done = [tol](double a, double b) { return std::abs(b - a) <= tol; };
    std::uintmax_t iters = max_iter;
    auto [a, b] = boost::math::tools::bisect(f, lo, hi, done, iters);
    if (iters >= max_iter) throw NumericError("bisect_root: iteration limit reached");
    return 0.5 * (a + b);
}

/// Maximiser of f on [lo, hi] (Brent's method on -f); f assumed unimodal.
template <class F>
double argmax(F&& f, double lo, double hi) {
    auto neg = [&f](double x) { return -f(x); };
    std::uintmax_t iters = 500;
    const auto res = boost::math::tools::brent_find_minima(neg, lo, hi, 52, iters);
    return res.first;
}

struct QuadratureNode {
    double x;
    double w;
};

/// Gauss-Legendre rule with n nodes mapped to [lo, hi], nodes ascending.
inline std::vector<QuadratureNode> gauss_legendre(double lo, double hi, int n) {
    if (n < 1) throw ArgumentError("gauss_legendre: need at least one node");
    if (!(lo < hi)) throw ArgumentError("gauss_legendre: need lo < hi");
    const auto zeros = boost::math::legendre_p_zeros<double>(n);
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    std::vector<QuadratureNode> out;
    out.reserve(static_cast<std::size_t>(n));
    for (double z : zeros) {
        const double dp = boost::math::legendre_p_prime(n, z);
        const double w = half * 2.0 / ((1.0 - z * z) * dp * dp);
        if (z == 0.0) {
            out.push_back({mid, w});
        } else {
            out.push_back({mid - half * z, w});
            out.push_back({mid + half * z, w});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
    return out;
}

}  // namespace divstop::numerics

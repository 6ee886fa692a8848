#pragma once

// Reference computations that avoid the library's own code paths: closed
// forms written out directly, std::cyl_bessel_* for special functions, and
// brute-force dense scans.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

inline double gbm_f(double r, double mu, double sigma) {
    const double c = mu / (sigma * sigma) - 0.5;
    return std::sqrt(c * c + 2.0 * r / (sigma * sigma)) + c;
}

inline double gbm_hit(double r, double mu, double sigma, double x, double a) {
    return std::pow(a / x, gbm_f(r, mu, sigma));
}

/// Bessel index nu: phi_r(x) = x^{-nu} K_nu(x sqrt(2r)).
inline double bessel_hit(double nu, double r, double x, double a) {
    const double s = std::sqrt(2.0 * r);
    return std::pow(a / x, nu) * std::cyl_bessel_k(nu, x * s) / std::cyl_bessel_k(nu, a * s);
}

inline double bessel_hit_up(double nu, double r, double x, double b) {
    const double s = std::sqrt(2.0 * r);
    return std::pow(b / x, nu) * std::cyl_bessel_i(nu, x * s) / std::cyl_bessel_i(nu, b * s);
}

/// 3-d Bessel: (a/x) exp(-sqrt(2r)(x - a)).
inline double bessel3_hit(double r, double x, double a) { return (a / x) * std::exp(-std::sqrt(2.0 * r) * (x - a)); }

/// Two-sided exit for Brownian motion with drift nu, volatility sigma, rate r,
/// started at y in (l, u); the log of GBM is such a process.
inline void bm_exit(double nu, double sigma, double r, double y, double l, double u, double& to_l, double& to_u) {
    const double s2 = sigma * sigma;
    const double disc = std::sqrt(nu * nu + 2.0 * r * s2);
    const double th_p = (-nu + disc) / s2;
    const double th_m = (-nu - disc) / s2;
    const double det = std::exp(th_p * l + th_m * u) - std::exp(th_m * l + th_p * u);
    to_l = (std::exp(th_p * y + th_m * u) - std::exp(th_m * y + th_p * u)) / det;
    to_u = (std::exp(th_m * y + th_p * l) - std::exp(th_p * y + th_m * l)) / det;
}

/// Lambda(x, a) for GBM capped example 3 written out piecewise:
/// blue, green, yellow, red.
inline double lambda_gbm_ex3(double x, double a) {
    if (x < a) return std::min(1.0 - x, 0.25);
    if (x >= 4.0 * a * (1.0 - a)) return 0.5 * (1.0 - a) * (a / x + (a / x) * (a / x));
    if (x >= 2.0 * a * std::sqrt(1.0 - a)) return 0.125 + (1.0 - a) * a * a / (2.0 * x * x);
    return 0.25;
}

/// Lambda(x, a) for GBM capped example 2 with f* = 2, alpha = 1/4.
inline double lambda_gbm_ex2(double x, double a) {
    if (x < a) return std::min(1.0 - x, 0.25);
    return 0.5 * std::min(1.0 - a, 0.25) + 0.5 * std::min((1.0 - a) * (a / x) * (a / x), 0.25);
}

/// Lambda(x, a) for the 3-d Bessel capped example 2: rates {0, 4}, alpha = 1/5.
inline double lambda_bessel_ex2(double x, double a) {
    if (x < a) return std::min(1.0 - x, 0.2);
    const double v0 = (1.0 - a) * a / x;
    const double v4 = v0 * std::exp(-2.0 * std::sqrt(2.0) * (x - a));
    return 0.5 * std::min(v0, 0.2) + 0.5 * std::min(v4, 0.2);
}

struct Run {
    double lo, hi;
};

/// Dense scan of f over a-grid; runs of points within tol of the maximum.
inline std::vector<Run> argmax_runs(const std::function<double(double)>& f, double lo, double hi, double step,
                                    double tol = 1e-12) {
    std::vector<double> as, vs;
    for (double a = lo; a <= hi + 1e-15; a += step) {
        as.push_back(a);
        vs.push_back(f(a));
    }
    const double best = *std::max_element(vs.begin(), vs.end());
    std::vector<Run> runs;
    for (std::size_t i = 0; i < as.size(); ++i) {
        if (vs[i] < best - tol) continue;
        if (!runs.empty() && i > 0 && vs[i - 1] >= best - tol)
            runs.back().hi = as[i];
        else
            runs.push_back({as[i], as[i]});
    }
    return runs;
}

inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Root of h on [lo, hi] by plain halving; h(lo) and h(hi) must differ in sign.
inline double halve(const std::function<double(double)>& h, double lo, double hi) {
    double flo = h(lo);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = h(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace oracle

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/trapezoidal.hpp>

#include "divstop/errors.hpp"

namespace divstop {

namespace detail {

inline bool is_half_integer(double nu) {
    const double t = nu - 0.5;
    return t >= 0.0 && t == std::floor(t) && t < 64.0;
}

inline double log_cosh(double y) {
    const double a = std::abs(y);
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

/// log K_{n+1/2}(z) from the terminating series.
inline double log_bessel_k_half_integer(double nu, double z) {
    const int n = static_cast<int>(nu - 0.5);
    double term = 1.0;  // (n+k)! / (k! (n-k)! (2z)^k) for k = 0
    double sum = 1.0;
    for (int k = 0; k < n; ++k) {
        term *= static_cast<double>((n + k + 1) * (n - k)) / (static_cast<double>(k + 1) * 2.0 * z);
        sum += term;
    }
    return 0.5 * std::log(std::numbers::pi / (2.0 * z)) - z + std::log(sum);
}

/// log K_nu(z) from K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt.
inline double log_bessel_k_integral(double nu, double z) {
    auto log_integrand = [nu, z](double t) { return -z * (std::cosh(t) - 1.0) + log_cosh(nu * t); };
    // Locate the peak and a truncation point where the integrand has fallen
    // below 1e-17 of it.
    double peak = log_integrand(0.0);
    double t = 0.0;
    const double dt = 0.25;
    for (int i = 0; i < 4000; ++i) {
        t += dt;
        const double v = log_integrand(t);
        if (v > peak) peak = v;
        if (v < peak - 40.0 && log_integrand(t + dt) < v) break;
    }
    const double upper = t;
    auto f = [&](double s) { return std::exp(log_integrand(s) - peak); };
    double err = 0.0;
    const double integral = boost::math::quadrature::trapezoidal(f, 0.0, upper, 1e-15, 16, &err);
    if (!(integral > 0.0) || !std::isfinite(integral))
        throw NumericError("bessel_k: quadrature failed for nu=" + std::to_string(nu) +
                           ", z=" + std::to_string(z));
    return -z + peak + std::log(integral);
}

}  // namespace detail

/// log K_nu(z), z > 0, nu >= 0. Half-integer orders use the closed form.
inline double log_bessel_k(double nu, double z) {
    if (!std::isfinite(nu) || !std::isfinite(z)) throw DomainError("bessel_k: non-finite argument");
    if (!(z > 0.0)) throw DomainError("bessel_k: argument must be positive");
    if (nu < 0.0) nu = -nu;  // K_{-nu} = K_nu
    if (detail::is_half_integer(nu)) return detail::log_bessel_k_half_integer(nu, z);
    return detail::log_bessel_k_integral(nu, z);
}

/// Modified Bessel function of the second kind.
inline double bessel_k(double nu, double z) { return std::exp(log_bessel_k(nu, z)); }

/// log I_nu(z), z >= 0, nu >= 0. Power series with every term positive,
/// summed relative to its largest term.
inline double log_bessel_i(double nu, double z) {
    if (!std::isfinite(nu) || !std::isfinite(z)) throw DomainError("bessel_i: non-finite argument");
    if (z < 0.0 || nu < 0.0) throw DomainError("bessel_i: need z >= 0 and nu >= 0");
    if (z == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (nu == 0.5) {
        // I_{1/2}(z) = sqrt(2/(pi z)) sinh z
        return 0.5 * std::log(2.0 / (std::numbers::pi * z)) + z + std::log(-std::expm1(-2.0 * z)) -
               std::numbers::ln2;
    }
    const double lq = 2.0 * std::log(0.5 * z);
    const double q = 0.25 * z * z;
    // Largest term sits near k* = (-nu + sqrt(nu^2 + 4q)) / 2.
    const double kstar = std::floor(0.5 * (-nu + std::sqrt(nu * nu + 4.0 * q)));
    const double log_tmax = kstar * lq + nu * std::log(0.5 * z) - std::lgamma(kstar + 1.0) -
                            std::lgamma(kstar + nu + 1.0);
    double sum = 1.0;
    double term = 1.0;
    for (double k = kstar; k > 0.0; k -= 1.0) {  // downwards: t_{k-1} = t_k k (k+nu) / q
        term *= k * (k + nu) / q;
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    term = 1.0;
    for (double k = kstar;; k += 1.0) {  // upwards
        term *= q / ((k + 1.0) * (k + 1.0 + nu));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return log_tmax + std::log(sum);
}

inline double bessel_i(double nu, double z) { return std::exp(log_bessel_i(nu, z)); }

}  // namespace divstop

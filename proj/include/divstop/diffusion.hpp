#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "divstop/bessel.hpp"
#include "divstop/errors.hpp"

namespace divstop {

/// Geometric Brownian motion dX = mu X dt + sigma X dW.
/// With `exponent_rates` set, every rate argument passed to the functions
/// below is read as the exponent f(r) itself rather than a discount rate.
struct Gbm {
    double mu = 0.0;
    double sigma = 1.0;
    bool exponent_rates = false;
};

/// Bessel process of index nu (dimension 2 nu + 2).
struct Bessel {
    double nu = 0.5;
};

/// Diffusion given by its generator 1/2 a(x)^2 u'' + b(x) u' - c(x) u.
struct Generic {
    std::function<double(double)> a;
    std::function<double(double)> b;
    std::function<double(double)> c;
    double riccati_start = 0.0;  ///< 0 selects 1000 * state_cap
    double psi_anchor = 0.0;     ///< 0 selects state_floor + 1e-3 (state_cap - state_floor)
};

struct DiffusionSpec {
    std::variant<Gbm, Bessel, Generic> kind;
    double state_floor = 0.0;
    double state_cap = 10.0;

    static DiffusionSpec gbm(double mu, double sigma, double cap = 10.0, bool exponent_rates = false) {
        DiffusionSpec s{Gbm{mu, sigma, exponent_rates}, 0.0, cap};
        s.validate();
        return s;
    }
    static DiffusionSpec bessel(double nu, double cap = 10.0) {
        DiffusionSpec s{Bessel{nu}, 0.0, cap};
        s.validate();
        return s;
    }
    static DiffusionSpec generic(Generic g, double floor, double cap) {
        DiffusionSpec s{std::move(g), floor, cap};
        s.validate();
        return s;
    }

    bool is_gbm() const { return std::holds_alternative<Gbm>(kind); }
    bool is_bessel() const { return std::holds_alternative<Bessel>(kind); }
    bool is_generic() const { return std::holds_alternative<Generic>(kind); }

    void validate() const {
        if (!std::isfinite(state_floor) || !std::isfinite(state_cap) || !(state_cap > state_floor))
            throw ArgumentError("diffusion: need finite state_floor < state_cap");
        if (const auto* g = std::get_if<Gbm>(&kind)) {
            if (!std::isfinite(g->mu) || !std::isfinite(g->sigma)) throw DomainError("gbm: non-finite parameter");
            if (!(g->sigma > 0.0)) throw ArgumentError("gbm: sigma must be positive");
            if (state_floor != 0.0) throw ArgumentError("gbm: state_floor must be 0");
        } else if (const auto* b = std::get_if<Bessel>(&kind)) {
            if (!std::isfinite(b->nu) || b->nu < 0.0) throw ArgumentError("bessel: nu must be >= 0");
            if (state_floor != 0.0) throw ArgumentError("bessel: state_floor must be 0");
        } else {
            const auto& gen = std::get<Generic>(kind);
            if (!gen.a || !gen.b || !gen.c) throw ArgumentError("generic: coefficient functions missing");
            for (int i = 1; i < 64; ++i) {
                const double x = state_floor + (state_cap - state_floor) * i / 64.0;
                if (!(gen.a(x) > 0.0)) throw ArgumentError("generic: a(x) must be positive on the state range");
            }
        }
    }
};

struct HittingTransform {
    enum class Source { ClosedForm, OdeNumeric };
    double value = 1.0;
    double log_value = 0.0;
    Source source = Source::ClosedForm;
};

struct ExitTransform {
    double to_lower = 0.0;
    double to_upper = 0.0;
};

/// Exponent f(r) = sqrt(c^2 + 2r/sigma^2) + c with c = mu/sigma^2 - 1/2, so
/// that E[exp(-r tau_a)] = (a/x)^f(r) for GBM started at x >= a.
inline double f_gbm(double r, double mu, double sigma) {
    if (!std::isfinite(r) || !std::isfinite(mu) || !std::isfinite(sigma)) throw DomainError("f_gbm: non-finite input");
    if (!(sigma > 0.0)) throw DomainError("f_gbm: sigma must be positive");
    if (r < 0.0) throw DomainError("f_gbm: negative rate");
    const double c = mu / (sigma * sigma) - 0.5;
    return std::sqrt(c * c + 2.0 * r / (sigma * sigma)) + c;
}

inline double gbm_centre(const Gbm& g) { return g.mu / (g.sigma * g.sigma) - 0.5; }

inline double gbm_exponent(const Gbm& g, double r) {
    if (!g.exponent_rates) return f_gbm(r, g.mu, g.sigma);
    if (!std::isfinite(r) || r < 0.0) throw DomainError("gbm: exponent must be finite and >= 0");
    return r;
}

/// Discount rate whose exponent is f; throws when f < f(0).
inline double gbm_rate_from_exponent(const Gbm& g, double f) {
    const double c = gbm_centre(g);
    const double d = f - c;
    if (d < std::abs(c) - 1e-12)
        throw DomainError("gbm: exponent " + std::to_string(f) + " is below f(0) = " +
                          std::to_string(c + std::abs(c)) + " for this drift and volatility");
    return std::max(0.0, 0.5 * g.sigma * g.sigma * (d * d - c * c));
}

namespace detail {

inline void check_rate(double r) {
    if (!std::isfinite(r) || r < 0.0) throw DomainError("diffusion: rate must be finite and >= 0");
}

/// Values of the fundamental solutions at one point. S = psi/phi is kept as
/// log S when `log_scale` holds and as S itself otherwise (the r = 0
/// recurrent cases where S = ln x).
struct Fundamental {
    double log_phi = 0.0;
    double s = 0.0;
    bool log_scale = true;
};

inline double gbm_psi_exponent(const Gbm& g, double f) {
    const double theta = f - 2.0 * gbm_centre(g);
    if (theta < -1e-12)
        throw DomainError("gbm: exponent " + std::to_string(f) + " has no increasing partner solution");
    return std::max(theta, 0.0);
}

inline Fundamental gbm_fundamental(const Gbm& g, double r, double x) {
    const double f = gbm_exponent(g, r);
    const double theta = gbm_psi_exponent(g, f);
    const double lx = std::log(x);
    if (f + theta == 0.0) return {0.0, lx, false};
    return {-f * lx, (f + theta) * lx, true};
}

inline double bessel_log_phi(double nu, double r, double x) {
    if (r == 0.0) return -2.0 * nu * std::log(x);
    const double s = std::sqrt(2.0 * r);
    if (nu == 0.5) return -std::log(x) - x * s + 0.5 * std::log(std::numbers::pi / (2.0 * s));
    return -nu * std::log(x) + log_bessel_k(nu, x * s);
}

inline double bessel_log_psi(double nu, double r, double x) {
    if (r == 0.0) return 0.0;
    const double s = std::sqrt(2.0 * r);
    if (x == 0.0) {
        // limit of x^{-nu} I_nu(x s)
        return nu * std::log(0.5 * s) - std::lgamma(nu + 1.0);
    }
    return -nu * std::log(x) + log_bessel_i(nu, x * s);
}

inline Fundamental bessel_fundamental(const Bessel& b, double r, double x) {
    if (r == 0.0 && b.nu == 0.0) return {0.0, std::log(x), false};
    const double lphi = bessel_log_phi(b.nu, r, x);
    return {lphi, bessel_log_psi(b.nu, r, x) - lphi, true};
}

struct GenericSample {
    double x = 0.0;
    double m = 0.0;
    double log_phi = 0.0;
    double d = 0.0;  ///< int_x^origin W / phi^2
};

inline double generic_start(const Generic& g, double cap) {
    return g.riccati_start > 0.0 ? g.riccati_start : 1000.0 * cap;
}

inline double generic_anchor(const Generic& g, double floor, double cap) {
    return g.psi_anchor > floor ? g.psi_anchor : floor + 1e-3 * (cap - floor);
}

/// Backward sweep of the Riccati system
///   m' = 2(c + r)/a^2 - 2 b m / a^2 - m^2,  (log phi)' = m,
///   (log W)' = -2 b / a^2,  D' = -W / phi^2 (below `origin` only)
/// from the start point through the requested points. Returns samples in
/// the order of `points`.
inline std::vector<GenericSample> generic_sweep(const Generic& g, double floor, double cap, double r,
                                                std::vector<double> points, double origin) {
    using State = std::array<double, 4>;
    const double start = generic_start(g, cap);
    std::vector<double> order = points;
    order.push_back(origin);
    std::sort(order.begin(), order.end(), std::greater<>());
    order.erase(std::unique(order.begin(), order.end()), order.end());
    if (!(order.back() > floor) || !(order.front() < start))
        throw ArgumentError("generic diffusion: evaluation point outside (state_floor, riccati_start)");

    State y{};
    {
        const double a = g.a(start), b = g.b(start), c = g.c(start) + r;
        const double a2 = a * a;
        y[0] = (-b - std::sqrt(b * b + 2.0 * a2 * c)) / a2;
        if (!std::isfinite(y[0])) throw NumericError("generic diffusion: invalid coefficients at riccati_start");
    }
    bool accumulate = false;
    auto rhs = [&](const State& s, State& ds, double x) {
        const double a = g.a(x), b = g.b(x), c = g.c(x) + r;
        const double a2 = a * a;
        ds[0] = 2.0 * c / a2 - 2.0 * b * s[0] / a2 - s[0] * s[0];
        ds[1] = s[0];
        ds[2] = -2.0 * b / a2;
        ds[3] = accumulate ? -std::exp(s[2] - 2.0 * s[1]) : 0.0;
    };
    namespace ode = boost::numeric::odeint;

    constexpr std::size_t kMaxSteps = 2000000;
    std::size_t steps = 0;
    std::vector<GenericSample> at;
    at.reserve(order.size());
    double x = start;
    for (double target : order) {
        if (target < x) {
            // Fresh stepper per segment: the right-hand side changes when D
            // starts accumulating, so cached first-same-as-last stages are stale.
            auto stepper = ode::make_controlled(1e-11, 1e-11, ode::runge_kutta_dopri5<State>());
            const double h0 = -std::min(1e-3 * std::max(std::abs(x), 1.0), x - target);
            auto budget = [&, x](const State&, double t) {
                if (++steps > kMaxSteps)
                    throw NumericError("generic diffusion: Riccati integration exceeded " + std::to_string(kMaxSteps) +
                                       " steps between x = " + std::to_string(x) + " and x = " + std::to_string(t) +
                                       "; the coefficients are too stiff here, try a smaller riccati_start");
            };
            ode::integrate_adaptive(stepper, rhs, y, x, target, h0, budget);
            x = target;
        }
        for (double v : y)
            if (!std::isfinite(v))
                throw NumericError("generic diffusion: Riccati integration blew up near x = " + std::to_string(x) +
                                   " (m = " + std::to_string(y[0]) + ")");
        at.push_back({target, y[0], y[1], y[3]});
        if (target <= origin) accumulate = true;
    }
    std::vector<GenericSample> out;
    out.reserve(points.size());
    for (double p : points) {
        const auto it = std::find_if(at.begin(), at.end(), [p](const GenericSample& s) { return s.x == p; });
        out.push_back(*it);
    }
    return out;
}

inline Fundamental closed_fundamental(const DiffusionSpec& model, double r, double x) {
    if (const auto* g = std::get_if<Gbm>(&model.kind)) return gbm_fundamental(*g, r, x);
    return bessel_fundamental(std::get<Bessel>(model.kind), r, x);
}

inline void check_state(const DiffusionSpec& model, double x, const char* what) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite state");
    if (!(x > model.state_floor)) throw DomainError(std::string(what) + ": state must exceed state_floor");
}

}  // namespace detail

/// log of the decreasing fundamental solution. Normalisation: GBM x^{-f},
/// Bessel x^{-nu} K_nu(x sqrt(2r)) (x^{-2 nu} at r = 0), Generic phi = 1 at
/// the Riccati start point.
inline double log_phi_dec(const DiffusionSpec& model, double r, double x) {
    detail::check_rate(r);
    detail::check_state(model, x, "phi_dec");
    if (const auto* g = std::get_if<Generic>(&model.kind))
        return detail::generic_sweep(*g, model.state_floor, model.state_cap, r, {x}, x)[0].log_phi;
    return detail::closed_fundamental(model, r, x).log_phi;
}

inline double phi_dec(const DiffusionSpec& model, double r, double x) { return std::exp(log_phi_dec(model, r, x)); }

/// log of the increasing fundamental solution. GBM x^{theta+}, Bessel
/// x^{-nu} I_nu(x sqrt(2r)) (1 at r = 0), Generic phi * int_anchor^x W/phi^2.
inline double log_psi_inc(const DiffusionSpec& model, double r, double x) {
    detail::check_rate(r);
    if (const auto* g = std::get_if<Generic>(&model.kind)) {
        detail::check_state(model, x, "psi_inc");
        const double anchor = detail::generic_anchor(*g, model.state_floor, model.state_cap);
        if (!(x > anchor)) throw DomainError("psi_inc: generic models need x above psi_anchor");
        const auto s = detail::generic_sweep(*g, model.state_floor, model.state_cap, r, {x, anchor}, x);
        return s[0].log_phi + std::log(s[1].d);
    }
    if (const auto* g = std::get_if<Gbm>(&model.kind)) {
        detail::check_state(model, x, "psi_inc");
        return detail::gbm_psi_exponent(*g, gbm_exponent(*g, r)) * std::log(x);
    }
    const auto& b = std::get<Bessel>(model.kind);
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("psi_inc: state must be >= 0");
    if (r == 0.0 && b.nu == 0.0) throw DomainError("psi_inc: no positive increasing solution for nu = 0, r = 0");
    return detail::bessel_log_psi(b.nu, r, x);
}

inline double psi_inc(const DiffusionSpec& model, double r, double x) { return std::exp(log_psi_inc(model, r, x)); }

/// m_r(x) = phi'(x) / phi(x).
inline double m_log_derivative(const DiffusionSpec& model, double r, double x) {
    detail::check_rate(r);
    detail::check_state(model, x, "m_log_derivative");
    if (const auto* g = std::get_if<Gbm>(&model.kind)) return -gbm_exponent(*g, r) / x;
    if (const auto* b = std::get_if<Bessel>(&model.kind)) {
        if (r == 0.0) return -2.0 * b->nu / x;
        const double s = std::sqrt(2.0 * r);
        if (b->nu == 0.5) return -s - 1.0 / x;
        return -s * std::exp(log_bessel_k(b->nu + 1.0, x * s) - log_bessel_k(b->nu, x * s));
    }
    const auto& g = std::get<Generic>(model.kind);
    return detail::generic_sweep(g, model.state_floor, model.state_cap, r, {x}, x)[0].m;
}

/// m_r on a whole grid; one backward sweep for Generic models.
inline std::vector<double> m_log_derivative_grid(const DiffusionSpec& model, double r, std::span<const double> xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    if (const auto* g = std::get_if<Generic>(&model.kind)) {
        detail::check_rate(r);
        for (double x : xs) detail::check_state(model, x, "m_log_derivative");
        const auto s = detail::generic_sweep(*g, model.state_floor, model.state_cap, r,
                                             std::vector<double>(xs.begin(), xs.end()), xs.empty() ? 1.0 : xs[0]);
        for (const auto& v : s) out.push_back(v.m);
        return out;
    }
    for (double x : xs) out.push_back(m_log_derivative(model, r, x));
    return out;
}

/// E[exp(-r tau_a)] for the process started at x >= a.
inline HittingTransform hit_transform(const DiffusionSpec& model, double r, double x, double a) {
    detail::check_rate(r);
    if (!std::isfinite(x) || !std::isfinite(a)) throw DomainError("hit_transform: non-finite state");
    if (a > x) throw ArgumentError("hit_transform: barrier above the starting state");
    if (a < model.state_floor) throw ArgumentError("hit_transform: barrier below state_floor");
    if (x == a) return {1.0, 0.0, HittingTransform::Source::ClosedForm};
    if (a == model.state_floor) {
        // The floor is not reached from above for the supported models.
        return {0.0, -std::numeric_limits<double>::infinity(), HittingTransform::Source::ClosedForm};
    }
    if (const auto* g = std::get_if<Generic>(&model.kind)) {
        const auto s = detail::generic_sweep(*g, model.state_floor, model.state_cap, r, {x, a}, x);
        const double lv = std::min(0.0, s[0].log_phi - s[1].log_phi);
        return {std::exp(lv), lv, HittingTransform::Source::OdeNumeric};
    }
    double lv;
    if (const auto* g = std::get_if<Gbm>(&model.kind)) {
        lv = gbm_exponent(*g, r) * (std::log(a) - std::log(x));
    } else {
        const auto& b = std::get<Bessel>(model.kind);
        if (b.nu == 0.5 && r > 0.0)
            lv = std::log(a / x) - std::sqrt(2.0 * r) * (x - a);
        else
            lv = detail::bessel_log_phi(b.nu, r, x) - detail::bessel_log_phi(b.nu, r, a);
    }
    lv = std::min(0.0, lv);
    return {std::exp(lv), lv, HittingTransform::Source::ClosedForm};
}

/// E[exp(-r tau_b)] for the process started at x <= b.
inline HittingTransform hit_up_transform(const DiffusionSpec& model, double r, double x, double b) {
    detail::check_rate(r);
    if (!std::isfinite(x) || !std::isfinite(b)) throw DomainError("hit_up_transform: non-finite state");
    if (b < x) throw ArgumentError("hit_up_transform: barrier below the starting state");
    if (x == b) return {1.0, 0.0, HittingTransform::Source::ClosedForm};
    if (x < model.state_floor) throw ArgumentError("hit_up_transform: state below state_floor");
    if (const auto* g = std::get_if<Generic>(&model.kind)) {
        const double anchor = detail::generic_anchor(*g, model.state_floor, model.state_cap);
        if (!(x > anchor)) throw DomainError("hit_up_transform: generic models need x above psi_anchor");
        const auto s = detail::generic_sweep(*g, model.state_floor, model.state_cap, r, {b, x, anchor}, b);
        const double lv = std::min(0.0, s[1].log_phi - s[0].log_phi + std::log((s[2].d - s[1].d) / s[2].d));
        return {std::exp(lv), lv, HittingTransform::Source::OdeNumeric};
    }
    if (const auto* g = std::get_if<Gbm>(&model.kind)) {
        const double theta = detail::gbm_psi_exponent(*g, gbm_exponent(*g, r));
        if (x == 0.0) {
            // GBM started at 0 stays there.
            return {0.0, -std::numeric_limits<double>::infinity(), HittingTransform::Source::ClosedForm};
        }
        const double lv = std::min(0.0, theta * (std::log(x) - std::log(b)));
        return {std::exp(lv), lv, HittingTransform::Source::ClosedForm};
    }
    const auto& bes = std::get<Bessel>(model.kind);
    if (r == 0.0) return {1.0, 0.0, HittingTransform::Source::ClosedForm};
    const double lv = std::min(0.0, detail::bessel_log_psi(bes.nu, r, x) - detail::bessel_log_psi(bes.nu, r, b));
    return {std::exp(lv), lv, HittingTransform::Source::ClosedForm};
}

/// Discounted probabilities of leaving (l, u) through l and through u.
inline ExitTransform exit_transform(const DiffusionSpec& model, double r, double x, double l, double u) {
    detail::check_rate(r);
    if (!std::isfinite(x) || !std::isfinite(l) || !std::isfinite(u)) throw DomainError("exit_transform: non-finite state");
    if (!(u - l > 1e-12 * std::max(1.0, std::abs(u)))) throw ArgumentError("exit_transform: degenerate bracket");
    if (x < l || x > u) throw ArgumentError("exit_transform: state outside the bracket");
    if (x == l) return {1.0, 0.0};
    if (x == u) return {0.0, 1.0};
    if (!(l > model.state_floor)) {
        // The floor is inaccessible: only the upper exit matters.
        return {0.0, hit_up_transform(model, r, x, u).value};
    }
    if (const auto* g = std::get_if<Generic>(&model.kind)) {
        const auto s = detail::generic_sweep(*g, model.state_floor, model.state_cap, r, {u, x, l}, u);
        const double dl = s[2].d;
        const double lower = std::exp(s[1].log_phi - s[2].log_phi) * s[1].d / dl;
        const double upper = std::exp(s[1].log_phi - s[0].log_phi) * (dl - s[1].d) / dl;
        return {std::clamp(lower, 0.0, 1.0), std::clamp(upper, 0.0, 1.0)};
    }
    const auto fx = detail::closed_fundamental(model, r, x);
    const auto fl = detail::closed_fundamental(model, r, l);
    const auto fu = detail::closed_fundamental(model, r, u);
    double lower;
    double upper;
    if (fx.log_scale) {
        const double den = std::log1p(-std::exp(fl.s - fu.s));
        lower = std::exp(fx.log_phi - fl.log_phi + std::log1p(-std::exp(fx.s - fu.s)) - den);
        upper = std::exp(fx.log_phi + fx.s - fu.log_phi - fu.s + std::log1p(-std::exp(fl.s - fx.s)) - den);
    } else {
        // phi is constant and S = ln x.
        if (!(fu.s > fl.s)) throw NumericError("exit_transform: degenerate scale");
        lower = (fu.s - fx.s) / (fu.s - fl.s);
        upper = (fx.s - fl.s) / (fu.s - fl.s);
    }
    return {std::clamp(lower, 0.0, 1.0), std::clamp(upper, 0.0, 1.0)};
}

struct ConditionViolation {
    double r = 0.0;
    double x = 0.0;
    double amount = 0.0;  ///< size of the decrease that was observed
};

struct ConditionReport {
    bool cii_a_holds = true;  ///< m_r(x) non-decreasing in x
    bool cii_b_holds = true;  ///< -m_r(x) non-decreasing in r
    std::vector<ConditionViolation> violations_a;
    std::vector<ConditionViolation> violations_b;
    std::vector<double> r_grid;
    std::vector<double> x_grid;
};

/// Finite-difference scan of the monotonicity of m_r(x) in x and of -m_r(x)
/// in r. Slack 1e-10 relative to |m|.
inline ConditionReport check_model_conditions(const DiffusionSpec& model, std::span<const double> r_grid,
                                              std::span<const double> x_grid) {
    for (std::size_t i = 1; i < r_grid.size(); ++i)
        if (!(r_grid[i] > r_grid[i - 1])) throw ArgumentError("check_model_conditions: r_grid must be increasing");
    for (std::size_t i = 1; i < x_grid.size(); ++i)
        if (!(x_grid[i] > x_grid[i - 1])) throw ArgumentError("check_model_conditions: x_grid must be increasing");

    ConditionReport rep;
    rep.r_grid.assign(r_grid.begin(), r_grid.end());
    rep.x_grid.assign(x_grid.begin(), x_grid.end());
    std::vector<std::vector<double>> m(r_grid.size());
    for (std::size_t j = 0; j < r_grid.size(); ++j) m[j] = m_log_derivative_grid(model, r_grid[j], x_grid);

    auto slack = [](double p, double q) { return 1e-10 * (1.0 + std::max(std::abs(p), std::abs(q))); };
    for (std::size_t j = 0; j < r_grid.size(); ++j) {
        for (std::size_t i = 1; i < x_grid.size(); ++i) {
            const double d = m[j][i] - m[j][i - 1];
            if (d < -slack(m[j][i], m[j][i - 1])) rep.violations_a.push_back({r_grid[j], x_grid[i], -d});
        }
    }
    for (std::size_t j = 1; j < r_grid.size(); ++j) {
        for (std::size_t i = 0; i < x_grid.size(); ++i) {
            const double d = m[j - 1][i] - m[j][i];  // -m_{r_j} - (-m_{r_{j-1}})
            if (d < -slack(m[j][i], m[j - 1][i])) rep.violations_b.push_back({r_grid[j], x_grid[i], -d});
        }
    }
    rep.cii_a_holds = rep.violations_a.empty();
    rep.cii_b_holds = rep.violations_b.empty();
    return rep;
}

}  // namespace divstop

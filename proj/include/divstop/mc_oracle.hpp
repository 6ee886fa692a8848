#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "divstop/diffusion.hpp"
#include "divstop/errors.hpp"
#include "divstop/policy.hpp"
#include "divstop/valuation.hpp"

namespace divstop {

enum class McScheme { Auto, Euler, ExactBessel3, ExactGbmIncrement };

inline std::string to_string(McScheme s) {
    switch (s) {
        case McScheme::Auto: return "auto";
        case McScheme::Euler: return "euler";
        case McScheme::ExactBessel3: return "exact_bessel3";
        case McScheme::ExactGbmIncrement: return "exact_gbm_increment";
    }
    return "unknown";
}

/// Simulation settings. The step is adaptive: h = max(dt, (d / (k vol))^2)
/// where d is the distance to the nearest stopping boundary, so dt is the
/// step used next to a boundary. k is step_sigmas for the exact schemes and
/// euler_step_sigmas for Euler, whose coefficient-freezing bias needs the
/// finer step.
struct McConfig {
    std::size_t n_paths = 100000;
    double dt = 1e-4;
    double horizon = 0.0;  ///< 0 selects T with exp(-r_min T) = 1e-6
    std::uint64_t seed = 20240601;
    McScheme scheme = McScheme::Auto;
    double step_sigmas = 6.0;
    double euler_step_sigmas = 24.0;
    bool bias_check = false;

    void validate() const {
        if (n_paths < 1000) throw ArgumentError("mc: n_paths must be >= 1000");
        if (!(dt > 0.0)) throw ArgumentError("mc: dt must be positive");
        if (horizon != 0.0 && !(horizon >= 100.0 * dt)) throw ArgumentError("mc: horizon must be >= 100 dt");
        if (!(step_sigmas >= 3.0) || !(euler_step_sigmas >= 3.0)) throw ArgumentError("mc: step_sigmas must be >= 3");
    }
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_effective = 0;  ///< paths stopped before the horizon
    std::size_t censored = 0;
    double truncation_bound = 0.0;
    bool bias_flag = false;
};

struct JEstimate {
    std::vector<double> rates;
    std::vector<McEstimate> per_rate;  ///< inner expectations
    McEstimate aggregated;             ///< attitude applied, weighted, delta-method SE
};

/// SplitMix64 as a uniform random bit generator; one instance per path,
/// keyed by (seed, path index).
class SplitMix64 {
public:
    using result_type = std::uint64_t;
    explicit SplitMix64(std::uint64_t state) : s_(state) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() {
        s_ += 0x9e3779b97f4a7c15ULL;
        return mix(s_);
    }
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static SplitMix64 for_path(std::uint64_t seed, std::uint64_t path) {
        return SplitMix64(mix(seed ^ mix(path + 0x632be59bd9b4e019ULL)));
    }

private:
    std::uint64_t s_;
};

namespace detail {

inline McScheme resolve_scheme(const DiffusionSpec& model, McScheme s) {
    if (s != McScheme::Auto) {
        if (s == McScheme::ExactGbmIncrement && !model.is_gbm()) throw ArgumentError("mc: exact GBM scheme needs a GBM model");
        if (s == McScheme::ExactBessel3 && !(model.is_bessel() && std::get<Bessel>(model.kind).nu == 0.5))
            throw ArgumentError("mc: exact Bessel scheme needs nu = 1/2");
        return s;
    }
    if (model.is_gbm()) return McScheme::ExactGbmIncrement;
    if (model.is_bessel() && std::get<Bessel>(model.kind).nu == 0.5) return McScheme::ExactBessel3;
    return McScheme::Euler;
}

/// Rates as discount rates, mapping GBM exponents back when needed.
inline double simulation_rate(const DiffusionSpec& model, double r) {
    if (const auto* g = std::get_if<Gbm>(&model.kind); g && g->exponent_rates) return gbm_rate_from_exponent(*g, r);
    return r;
}

struct PathOutcome {
    bool stopped = false;
    double tau = 0.0;
    double at = 0.0;  ///< boundary point where the path stopped
    double killing = 0.0;  ///< int c(X) dt for generic models
};

/// One path from x until it enters R or the horizon passes.
template <class Rng>
PathOutcome simulate_path(const DiffusionSpec& model, McScheme scheme, double x, const Policy& R, double horizon,
                          const McConfig& cfg, Rng& rng) {
    using K = Policy::Location::Kind;
    std::normal_distribution<double> normal;
    PathOutcome out;
    double t = 0.0;
    auto loc = R.locate(x);
    if (loc.kind == K::Inside) return {true, 0.0, x, 0.0};
    if (loc.kind == K::Never) return out;
    const double k = scheme == McScheme::Euler ? cfg.euler_step_sigmas : cfg.step_sigmas;

    auto step_for = [&](double d, double vol, double drift) {
        double h = (d / (k * vol)) * (d / (k * vol));
        if (drift != 0.0) h = std::min(h, d / (k * std::abs(drift)));
        h = std::max(h, cfg.dt);
        return std::min(h, horizon - t);
    };
    auto entered = [&](double prev, double now, double& at) {
        const auto l = R.locate(now);
        const auto lp = R.locate(prev);
        // A step may jump over a whole interval; that counts as entry too.
        if (l.kind != K::Inside && lp.kind == l.kind && lp.lower == l.lower && lp.upper == l.upper) return false;
        at = now < prev ? lp.lower : lp.upper;
        return true;
    };

    if (scheme == McScheme::ExactGbmIncrement) {
        const auto& g = std::get<Gbm>(model.kind);
        const double nu = g.mu - 0.5 * g.sigma * g.sigma;
        double y = std::log(x);
        double X = x;
        while (t < horizon) {
            double d = std::numeric_limits<double>::infinity();
            if (loc.kind == K::Above || loc.kind == K::Gap) d = std::min(d, y - std::log(loc.lower));
            if (loc.kind == K::Below || loc.kind == K::Gap) d = std::min(d, std::log(loc.upper) - y);
            const double h = step_for(d, g.sigma, nu);
            y += nu * h + g.sigma * std::sqrt(h) * normal(rng);
            t += h;
            const double prev = X;
            X = std::exp(y);
            double at;
            if (entered(prev, X, at)) return {true, t, at, 0.0};
            loc = R.locate(X);
        }
        return out;
    }
    if (scheme == McScheme::ExactBessel3) {
        std::array<double, 3> w{x, 0.0, 0.0};
        double X = x;
        while (t < horizon) {
            double d = std::numeric_limits<double>::infinity();
            if (loc.kind == K::Above || loc.kind == K::Gap) d = std::min(d, X - loc.lower);
            if (loc.kind == K::Below || loc.kind == K::Gap) d = std::min(d, loc.upper - X);
            const double h = step_for(d, 1.0, 0.0);
            const double sh = std::sqrt(h);
            for (auto& c : w) c += sh * normal(rng);
            t += h;
            const double prev = X;
            X = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
            double at;
            if (entered(prev, X, at)) return {true, t, at, 0.0};
            loc = R.locate(X);
        }
        return out;
    }
    // Euler-Maruyama on the generator coefficients.
    auto coeff = [&](double s, double& a, double& b, double& c) {
        if (const auto* g = std::get_if<Gbm>(&model.kind)) {
            a = g->sigma * s;
            b = g->mu * s;
            c = 0.0;
        } else if (const auto* be = std::get_if<Bessel>(&model.kind)) {
            a = 1.0;
            b = (2.0 * be->nu + 1.0) / (2.0 * s);
            c = 0.0;
        } else {
            const auto& gen = std::get<Generic>(model.kind);
            a = gen.a(s);
            b = gen.b(s);
            c = gen.c(s);
        }
    };
    double X = x;
    double kill = 0.0;
    const double floor = model.state_floor;
    while (t < horizon) {
        double a, b, c;
        coeff(X, a, b, c);
        double d = X - floor;
        if (loc.kind == K::Above || loc.kind == K::Gap) d = std::min(d, X - loc.lower);
        if (loc.kind == K::Below || loc.kind == K::Gap) d = std::min(d, loc.upper - X);
        const double h = step_for(d, std::max(std::abs(a), 1e-300), b);
        const double prev = X;
        X = X + b * h + a * std::sqrt(h) * normal(rng);
        if (X <= floor) X = floor + (floor - X);  // reflect numerically at the floor
        kill += c * h;
        t += h;
        double at;
        if (entered(prev, X, at)) return {true, t, at, kill};
        loc = R.locate(X);
    }
    out.killing = kill;
    return out;
}

struct RateSamples {
    std::vector<double> mean;
    std::vector<double> cov;  ///< row-major, per-path covariance
    std::size_t stopped = 0;
    std::size_t n = 0;
};

/// Per-path payoffs exp(-r tau) g(X_tau) for every rate, common random numbers.
inline RateSamples simulate_rates(const DiffusionSpec& model, std::span<const double> rates, double x, const Policy& R,
                                  const std::function<double(double)>& payoff, const McConfig& cfg, double horizon) {
    const auto scheme = resolve_scheme(model, cfg.scheme);
    const std::size_t m = rates.size();
    RateSamples s;
    s.n = cfg.n_paths;
    s.mean.assign(m, 0.0);
    s.cov.assign(m * m, 0.0);
    std::vector<double> y(m);
    std::vector<double> delta(m);
    // Welford accumulation of mean and co-moments.
    for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        auto rng = SplitMix64::for_path(cfg.seed, p);
        const auto o = simulate_path(model, scheme, x, R, horizon, cfg, rng);
        if (o.stopped) ++s.stopped;
        const double g = o.stopped ? payoff(o.at) : 0.0;
        for (std::size_t j = 0; j < m; ++j) y[j] = o.stopped ? std::exp(-rates[j] * o.tau - o.killing) * g : 0.0;
        const double n1 = static_cast<double>(p + 1);
        for (std::size_t j = 0; j < m; ++j) {
            delta[j] = y[j] - s.mean[j];
            s.mean[j] += delta[j] / n1;
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) s.cov[i * m + j] += delta[i] * (y[j] - s.mean[j]);
    }
    const double denom = static_cast<double>(cfg.n_paths - 1);
    for (auto& c : s.cov) c /= denom;
    return s;
}

inline double default_horizon(std::span<const double> rates, const McConfig& cfg) {
    if (cfg.horizon > 0.0) return cfg.horizon;
    double rmin = std::numeric_limits<double>::infinity();
    for (double r : rates) rmin = std::min(rmin, r);
    return std::log(1e6) / rmin;
}

}  // namespace detail

/// Monte Carlo estimate of E[exp(-r tau_a)] from x > a.
inline McEstimate estimate_hit_transform(const DiffusionSpec& model, double r, double x, double a, const McConfig& cfg) {
    cfg.validate();
    if (a > x) throw ArgumentError("estimate_hit_transform: barrier above the starting state");
    const double rate = detail::simulation_rate(model, r);
    if (!(rate > 0.0)) throw UnsupportedError("estimate_hit_transform: zero rate cannot be estimated under truncation");
    if (x == a) return {1.0, 0.0, cfg.n_paths, 0, 0.0, false};
    const std::vector<double> rates{rate};
    const double T = detail::default_horizon(rates, cfg);
    const auto R = Policy::barrier(model.state_floor, a);
    auto unit = [](double) { return 1.0; };
    const auto s = detail::simulate_rates(model, rates, x, R, unit, cfg, T);
    McEstimate e;
    e.mean = s.mean[0];
    e.std_error = std::sqrt(s.cov[0] / static_cast<double>(s.n));
    e.n_effective = s.stopped;
    e.censored = s.n - s.stopped;
    e.truncation_bound = std::exp(-rate * T);
    if (cfg.bias_check) {
        McConfig half = cfg;
        half.dt = cfg.dt / 2.0;
        const auto s2 = detail::simulate_rates(model, rates, x, R, unit, half, T);
        e.bias_flag = std::abs(s2.mean[0] - e.mean) > 2.0 * e.std_error;
    }
    return e;
}

/// Monte Carlo estimate of the inner expectations of J(x, R) for every rate
/// of the law, and of J itself by the delta method.
inline JEstimate estimate_J(const ValuationContext& ctx, double x, const Policy& R, const McConfig& cfg) {
    cfg.validate();
    const auto& model = ctx.model();
    const auto& att = ctx.attitude();
    JEstimate out;
    for (const auto& n : ctx.law().nodes()) {
        const double rate = detail::simulation_rate(model, n.r);
        if (!(rate > 0.0)) throw UnsupportedError("estimate_J: zero rate cannot be estimated under truncation");
        out.rates.push_back(rate);
    }
    if (R.contains(x)) {
        const double g = ctx.payoff(x);
        for (std::size_t j = 0; j < out.rates.size(); ++j) out.per_rate.push_back({g, 0.0, cfg.n_paths, 0, 0.0, false});
        out.aggregated = {att(g), 0.0, cfg.n_paths, 0, 0.0, false};
        return out;
    }
    const double T = detail::default_horizon(out.rates, cfg);
    double gmax = 0.0;
    for (const auto& iv : R.intervals()) gmax = std::max({gmax, ctx.payoff(iv.lo), ctx.payoff(iv.hi)});
    auto payoff = [&ctx](double s) { return ctx.payoff(s); };
    const auto s = detail::simulate_rates(model, out.rates, x, R, payoff, cfg, T);
    const std::size_t m = out.rates.size();
    std::vector<double> grad(m);
    double agg = 0.0;
    const auto& nodes = ctx.law().nodes();
    for (std::size_t j = 0; j < m; ++j) {
        McEstimate e;
        e.mean = s.mean[j];
        e.std_error = std::sqrt(s.cov[j * m + j] / static_cast<double>(s.n));
        e.n_effective = s.stopped;
        e.censored = s.n - s.stopped;
        e.truncation_bound = gmax * std::exp(-out.rates[j] * T);
        out.per_rate.push_back(e);
        const auto v = att.eval(std::max(0.0, e.mean));
        agg += nodes[j].w * v.phi;
        grad[j] = nodes[j].w * v.dphi;
    }
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) var += grad[i] * s.cov[i * m + j] * grad[j];
    out.aggregated.mean = agg;
    out.aggregated.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(s.n));
    out.aggregated.n_effective = s.stopped;
    out.aggregated.censored = s.n - s.stopped;
    out.aggregated.truncation_bound = gmax * std::exp(-*std::min_element(out.rates.begin(), out.rates.end()) * T);
    return out;
}

struct DriftEstimate {
    double x = 0.0;
    double dt = 0.0;
    double drift = 0.0;  ///< E[(K - X_dt)^+] - (K - x)^+
    double std_error = 0.0;
};

struct MartingaleCheck {
    bool submartingale = true;    ///< no drift significantly below 0
    bool supermartingale = true;  ///< no drift significantly above 0
    std::vector<DriftEstimate> drifts;
};

/// Conditional one-step drift of (K - X)^+ from each state over each
/// horizon in t_grid, flagged at 3 standard errors.
inline MartingaleCheck check_submartingale(const DiffusionSpec& model, double K, const McConfig& cfg,
                                           std::span<const double> t_grid, std::span<const double> states) {
    cfg.validate();
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw ArgumentError("check_submartingale: t_grid must be increasing");
    const auto scheme = detail::resolve_scheme(model, cfg.scheme);
    MartingaleCheck out;
    std::size_t key = 0;
    for (double x0 : states) {
        for (double dt : t_grid) {
            if (!(dt > 0.0)) continue;
            const double y0 = std::max(K - x0, 0.0);
            double mean = 0.0, m2 = 0.0;
            for (std::size_t p = 0; p < cfg.n_paths; ++p) {
                auto rng = SplitMix64::for_path(cfg.seed + 7919 * ++key, p);
                double X;
                if (scheme == McScheme::ExactGbmIncrement) {
                    const auto& g = std::get<Gbm>(model.kind);
                    std::normal_distribution<double> normal;
                    X = x0 * std::exp((g.mu - 0.5 * g.sigma * g.sigma) * dt + g.sigma * std::sqrt(dt) * normal(rng));
                } else if (scheme == McScheme::ExactBessel3) {
                    std::normal_distribution<double> normal;
                    const double s = std::sqrt(dt);
                    const double w0 = x0 + s * normal(rng), w1 = s * normal(rng), w2 = s * normal(rng);
                    X = std::sqrt(w0 * w0 + w1 * w1 + w2 * w2);
                } else {
                    X = x0;
                    std::normal_distribution<double> normal;
                    double t = 0.0;
                    while (t < dt) {
                        const double h = std::min(cfg.dt, dt - t);
                        double a = 1.0, b = 0.0;
                        if (const auto* gm = std::get_if<Gbm>(&model.kind)) {
                            a = gm->sigma * X;
                            b = gm->mu * X;
                        } else if (const auto* be = std::get_if<Bessel>(&model.kind)) {
                            b = (2.0 * be->nu + 1.0) / (2.0 * X);
                        } else {
                            const auto& gen = std::get<Generic>(model.kind);
                            a = gen.a(X);
                            b = gen.b(X);
                        }
                        X = std::abs(X + b * h + a * std::sqrt(h) * normal(rng));
                        t += h;
                    }
                }
                const double y = std::max(K - X, 0.0) - y0;
                const double d = y - mean;
                mean += d / static_cast<double>(p + 1);
                m2 += d * (y - mean);
            }
            const double se = std::sqrt(m2 / static_cast<double>(cfg.n_paths - 1) / static_cast<double>(cfg.n_paths));
            out.drifts.push_back({x0, dt, mean, se});
            if (mean < -3.0 * se) out.submartingale = false;
            if (mean > 3.0 * se) out.supermartingale = false;
        }
    }
    return out;
}

}  // namespace divstop

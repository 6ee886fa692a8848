#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "divstop/diffusion.hpp"
#include "divstop/errors.hpp"
#include "divstop/policy.hpp"
#include "divstop/preference.hpp"

namespace divstop {

/// How a zero discount rate values a stopping time that may be infinite.
/// `TransformLimit` uses the r -> 0 limit of the hitting transform, i.e. the
/// probability of stopping in finite time.
enum class ZeroRateConvention { Reject, TransformLimit };

class ValuationContext {
public:
    /// `payoff` empty means the put payoff (K - x)^+.
    ValuationContext(DiffusionSpec model, DiscountLaw law, AttitudeFunction att, double strike,
                     ZeroRateConvention zero_rate = ZeroRateConvention::Reject,
                     std::function<double(double)> payoff = {})
        : model_(std::move(model)),
          law_(std::move(law)),
          att_(std::move(att)),
          strike_(strike),
          zero_rate_(zero_rate),
          payoff_(std::move(payoff)) {
        model_.validate();
        if (!(strike_ > 0.0) || !std::isfinite(strike_)) throw ArgumentError("context: strike must be positive");
        if (law_.f_space()) {
            auto* g = std::get_if<Gbm>(&model_.kind);
            if (!g) throw ArgumentError("context: exponent-valued laws require a GBM model");
            g->exponent_rates = true;
        } else if (zero_rate_ == ZeroRateConvention::Reject) {
            for (const auto& n : law_.nodes())
                if (n.r == 0.0)
                    throw ConventionError("context: zero discount rate needs the transform-limit convention");
        }
    }

    const DiffusionSpec& model() const { return model_; }
    const DiscountLaw& law() const { return law_; }
    const AttitudeFunction& attitude() const { return att_; }
    double strike() const { return strike_; }
    ZeroRateConvention zero_rate() const { return zero_rate_; }
    bool is_put() const { return !payoff_; }

    double payoff(double x) const {
        if (!std::isfinite(x)) throw DomainError("payoff: non-finite state");
        if (payoff_) {
            const double v = payoff_(x);
            if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("payoff: must be finite and non-negative");
            return v;
        }
        return std::max(strike_ - x, 0.0);
    }

    /// Classification tolerance 1e-9 (1 + |v|).
    static double tolerance(double v) { return 1e-9 * (1.0 + std::abs(v)); }

    ValuationContext with_attitude(AttitudeFunction att) const {
        ValuationContext c = *this;
        c.att_ = std::move(att);
        return c;
    }

private:
    DiffusionSpec model_;
    DiscountLaw law_;
    AttitudeFunction att_;
    double strike_;
    ZeroRateConvention zero_rate_;
    std::function<double(double)> payoff_;
};

inline double payoff_g(const ValuationContext& ctx, double x) { return ctx.payoff(x); }

/// E[exp(-r tau(x, R)) g(X_tau)] for one discount rate; 0 on {tau = infinity}.
inline double inner_expectation(const ValuationContext& ctx, double r, double x, const Policy& R) {
    using K = Policy::Location::Kind;
    const auto loc = R.locate(x);
    const auto& m = ctx.model();
    switch (loc.kind) {
        case K::Inside: return ctx.payoff(x);
        case K::Never: return 0.0;
        case K::Above: return ctx.payoff(loc.lower) * hit_transform(m, r, x, loc.lower).value;
        case K::Below: return ctx.payoff(loc.upper) * hit_up_transform(m, r, x, loc.upper).value;
        case K::Gap: {
            const auto e = exit_transform(m, r, x, loc.lower, loc.upper);
            return ctx.payoff(loc.lower) * e.to_lower + ctx.payoff(loc.upper) * e.to_upper;
        }
    }
    return 0.0;
}

/// J(x, R): the aggregated value of following R from x.
inline double continuation_value(const ValuationContext& ctx, double x, const Policy& R) {
    if (R.contains(x)) return ctx.attitude()(ctx.payoff(x));
    const auto& att = ctx.attitude();
    return integrate_rho(ctx.law(), [&](double r) { return att(inner_expectation(ctx, r, x, R)); });
}

/// Lambda(x, a): value of the one-barrier policy [floor, a], extended by
/// phi(g(x)) below the barrier.
inline double barrier_value(const ValuationContext& ctx, double x, double a) {
    const auto& att = ctx.attitude();
    if (x <= a) return att(ctx.payoff(x));
    const double ga = ctx.payoff(a);
    const auto& m = ctx.model();
    return integrate_rho(ctx.law(), [&](double r) { return att(ga * hit_transform(m, r, x, a).value); });
}

/// V(x, R) = max(phi(g(x)), J(x, R)).
inline double policy_value(const ValuationContext& ctx, double x, const Policy& R) {
    return std::max(ctx.attitude()(ctx.payoff(x)), continuation_value(ctx, x, R));
}

enum class Region : char { Continue = 0, Indifferent = 1, Stop = 2 };

struct RegionClassification {
    std::vector<double> grid;
    std::vector<Region> region;

    std::vector<double> select(Region which) const {
        std::vector<double> out;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (region[i] == which) out.push_back(grid[i]);
        return out;
    }
    std::vector<double> stop() const { return select(Region::Stop); }
    std::vector<double> indifferent() const { return select(Region::Indifferent); }
    std::vector<double> cont() const { return select(Region::Continue); }
};

/// Pointwise comparison of phi(g(x)) with J(x, R) on the grid.
inline RegionClassification classify(const ValuationContext& ctx, const Policy& R, std::span<const double> x_grid) {
    RegionClassification out;
    out.grid.assign(x_grid.begin(), x_grid.end());
    out.region.reserve(x_grid.size());
    for (double x : x_grid) {
        const double stop = ctx.attitude()(ctx.payoff(x));
        const double cont = continuation_value(ctx, x, R);
        const double eps = ValuationContext::tolerance(stop);
        if (stop > cont + eps)
            out.region.push_back(Region::Stop);
        else if (std::abs(stop - cont) <= eps)
            out.region.push_back(Region::Indifferent);
        else
            out.region.push_back(Region::Continue);
    }
    return out;
}

}  // namespace divstop

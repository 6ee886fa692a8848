#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "divstop/equilibrium.hpp"
#include "divstop/harness/examples.hpp"
#include "divstop/numerics.hpp"

namespace divstop::harness {

/// One compared quantity. Categorical lines (verdicts, regimes) set `text`
/// fields and leave the numbers at zero.
struct ReproductionLine {
    std::string label;
    std::string check;   ///< the statement being checked
    std::string source;  ///< "published", "derived" or "identity"
    double expected = 0.0;
    double computed = 0.0;
    double tolerance = 0.0;
    std::string expected_text;
    std::string computed_text;
    bool pass = false;
};

struct ReproductionRecord {
    std::string example_id;
    std::vector<ReproductionLine> lines;
    double runtime_s = 0.0;
    bool all_pass() const {
        for (const auto& l : lines)
            if (!l.pass) return false;
        return !lines.empty();
    }
};

namespace detail {

struct LineSink {
    std::vector<ReproductionLine>& out;

    void number(std::string label, std::string check, std::string source, double expected, double computed, double tol) {
        const bool ok = std::isfinite(computed) && std::abs(computed - expected) <= tol;
        out.push_back({std::move(label), std::move(check), std::move(source), expected, computed, tol, {}, {}, ok});
    }
    void text(std::string label, std::string check, std::string source, std::string expected, std::string computed) {
        const bool ok = expected == computed;
        out.push_back({std::move(label), std::move(check), std::move(source), 0, 0, 0, expected, computed, ok});
    }
    void flag(std::string label, std::string check, std::string source, bool holds) {
        text(std::move(label), std::move(check), std::move(source), "true", holds ? "true" : "false");
    }
};

inline std::vector<double> verdict_x_grid() { return numerics::linspace(0.0, 2.0, 401); }

inline EquilibriumReport verdict_at(const ValuationContext& ctx, double a_star, double step) {
    const auto xs = verdict_x_grid();
    const auto as = equilibrium_barrier_grid(a_star, ctx.strike(), step);
    return optimal_verdict(ctx, xs, as);
}

inline const Interval& first_run(const ValuationContext& ctx, double x, double a_star, double step,
                                 std::vector<BarrierMapRow>& keep) {
    const std::vector<double> xs{x};
    const auto as = equilibrium_barrier_grid(a_star, ctx.strike(), step);
    keep = optimal_barrier_map(ctx, xs, as);
    return keep.front().maximizers.front();
}

inline double same_threshold_linear(const ValuationContext& ctx) {
    return smallest_threshold(ctx.with_attitude(AttitudeFunction::linear())).a_star;
}

inline void smooth_common(LineSink& s, const ValuationContext& ctx, double a_star) {
    s.flag("conditions", "model and attitude conditions hold on the scan grids", "derived",
           check_conditions(ctx).all_hold());
    s.number("a* (linear attitude)", "threshold coincides with the linear attitude", "published", a_star,
             same_threshold_linear(ctx), 1e-10);
    const auto rep = verdict_at(ctx, a_star, 1e-3);
    s.text("verdict", "smallest equilibrium is optimal", "published", "exists", to_string(rep.verdict.kind));
}

inline void gbm_thm_small(LineSink& s, const ValuationContext& ctx) {
    const auto th = smallest_threshold(ctx);
    const double fbar = 1.5;
    s.number("a*", "a* = K fbar / (1 + fbar) with fbar = 3/2", "published", fbar / (1.0 + fbar), th.a_star, 1e-8);
    s.text("regime", "threshold is an interior root", "derived", "root", to_string(th.regime));
    smooth_common(s, ctx, th.a_star);
}

inline void bessel_thm_small(LineSink& s, const ValuationContext& ctx) {
    const auto th = smallest_threshold(ctx);
    const double sb = 1.0, K = 1.0;
    const double closed = (sb * K - 2.0 + std::sqrt(4.0 + sb * sb * K * K)) / (2.0 * sb);
    s.number("a*", "a* = (sK - 2 + sqrt(4 + s^2 K^2)) / (2s), s = 1", "published", closed, th.a_star, 1e-8);
    s.number("a* golden", "a* = (sqrt 5 - 1) / 2", "derived", (std::sqrt(5.0) - 1.0) / 2.0, th.a_star, 1e-8);
    smooth_common(s, ctx, th.a_star);
}

inline void capped_exists(LineSink& s, const ValuationContext& ctx, double expected_a, double mean_branch,
                          double peak) {
    const double alpha = ctx.attitude().alpha();
    const auto th = smallest_threshold(ctx);
    s.flag("case", "1 - alpha <= peak threshold", "identity", 1.0 - alpha <= peak);
    s.number("a*", "a* = max(1 - alpha, mean threshold)", "published", std::max(1.0 - alpha, mean_branch), th.a_star,
             1e-12);
    s.number("a* value", "a* equals 1 - alpha here", "derived", expected_a, th.a_star, 1e-12);
    const auto rep = verdict_at(ctx, th.a_star, 1e-3);
    s.text("verdict", "smallest equilibrium is optimal", "published", "exists", to_string(rep.verdict.kind));
    s.number("optimal barrier", "optimal barrier equals a*", "published", th.a_star, rep.verdict.a, 1e-12);
}

inline void gbm_cap_ex2(LineSink& s, const ValuationContext& ctx) {
    const auto th = smallest_threshold(ctx);
    const double gamma = (1.0 + std::sqrt(13.0)) / 8.0;
    s.flag("case", "1 - alpha > f*/(1 + f*) = 2/3", "identity", 1.0 - ctx.attitude().alpha() > 2.0 / 3.0);
    s.number("gamma", "gamma: smaller root of (1-a)a^2 = 9/64, i.e. (1 + sqrt 13)/8", "derived", gamma, th.a_star,
             1e-10);
    const double step = 1e-3;
    const auto rep = verdict_at(ctx, th.a_star, step);
    s.text("verdict", "optimal equilibrium exists but is not the smallest", "published", "exists-not-smallest",
           to_string(rep.verdict.kind));
    s.number("optimal barrier", "optimal barrier is f*/(1 + f*) = 2/3", "published", 2.0 / 3.0, rep.verdict.a, step);
    const auto xs = numerics::linspace(0.0, 2.0, 200);
    const auto as = numerics::linspace(th.a_star, 1.0, 200);
    double worst = std::numeric_limits<double>::infinity();
    for (double x : xs) {
        const double best = barrier_value(ctx, x, 2.0 / 3.0);
        for (double a : as) worst = std::min(worst, best - barrier_value(ctx, x, a));
    }
    s.flag("dominance", "Lambda(x, 2/3) >= Lambda(x, a) - 1e-9 on a 200 x 200 grid", "published", worst >= -1e-9);
}

inline void gbm_cap_ex3(LineSink& s, const ValuationContext& ctx) {
    const auto th = smallest_threshold(ctx);
    const double gamma = (1.0 + std::sqrt(13.0)) / 8.0;
    s.number("gamma", "a* = gamma = (1 + sqrt 13)/8", "published", gamma, th.a_star, 1e-10);
    const double step = 1e-4, tol = 2.0 * step;
    std::vector<BarrierMapRow> keep;
    const auto& p = first_run(ctx, 0.72, th.a_star, step, keep);
    s.number("a**(0.72) lo", "a** = [gamma, 1] for gamma <= x < 3/4", "published", gamma, p.lo, tol);
    s.number("a**(0.72) hi", "a** = [gamma, 1] for gamma <= x < 3/4", "published", 1.0, p.hi, tol);
    s.number("a**(0.85)", "a** = 2/3 for 4 sqrt 3/9 <= x < 8/9", "published", 2.0 / 3.0,
             first_run(ctx, 0.85, th.a_star, step, keep).lo, tol);
    const double split = (7.0 * std::sqrt(33.0) - 9.0) / 32.0;
    s.flag("branch at 0.95", "8/9 <= 0.95 < (7 sqrt 33 - 9)/32", "identity", 8.0 / 9.0 <= 0.95 && 0.95 < split);
    s.number("a**(0.95)", "a** = (1 + sqrt(1 - x))/2 below (7 sqrt 33 - 9)/32", "published",
             0.5 * (1.0 + std::sqrt(0.05)), first_run(ctx, 0.95, th.a_star, step, keep).lo, tol);
    const double a1 = (-1.2 + 1.0 + std::sqrt(1.44 + 1.2 + 1.0)) / 3.0;
    s.number("a**(1.2)", "a** = max(a1(x), gamma) above (7 sqrt 33 - 9)/32", "published", std::max(a1, gamma),
             first_run(ctx, 1.2, th.a_star, step, keep).lo, tol);
    const auto rep = verdict_at(ctx, th.a_star, 1e-3);
    s.text("verdict", "there does not exist an optimal equilibrium", "published", "does-not-exist",
           to_string(rep.verdict.kind));
}

inline void bessel_cap_ex2(LineSink& s, const ValuationContext& ctx) {
    const auto th = smallest_threshold(ctx);
    const double gamma = th.a_star;
    s.number("gamma", "gamma ~ 0.71305", "published", 0.71305, gamma, 5e-5);
    const auto& model = ctx.model();
    const double r = 4.0;
    // (1 - a) phi_r(x)/phi_r(a) peaks where m_r(a) = -1/(1 - a).
    const double a_hat = numerics::bisect_root(
        [&](double a) { return -1.0 / (1.0 - a) - m_log_derivative(model, r, a); }, 0.5, 0.99, 1e-14);
    const double closed = (std::sqrt(2.0) + std::sqrt(3.0) - 1.0) / (2.0 * std::sqrt(2.0));
    s.number("a hat", "a hat = (sqrt 2 + sqrt 3 - 1)/(2 sqrt 2)", "published", closed, a_hat, 1e-10);
    const double alpha = ctx.attitude().alpha();
    const double x2 = numerics::bisect_root(
        [&](double x) { return (1.0 - a_hat) * hit_transform(model, r, x, a_hat).value - alpha; }, a_hat, 2.0, 1e-14);
    s.number("x**(a hat)", "x**(a hat) ~ 0.80439", "published", 0.80439, x2, 5e-5);
    s.number("5 gamma (1 - gamma)", "5 gamma (1 - gamma) ~ 1.02316", "published", 1.02316,
             5.0 * gamma * (1.0 - gamma), 5e-5);
    const double step = 1e-4, tol = 2.0 * step;
    std::vector<BarrierMapRow> keep;
    s.number("a**(0.81)", "a** = a hat for x**(a hat) <= x <= (5/4)(sqrt 3 - 1)", "published", closed,
             first_run(ctx, 0.81, gamma, step, keep).lo, tol);
    s.number("a**(1.5)", "a** = gamma for x >= 5 gamma (1 - gamma)", "published", gamma,
             first_run(ctx, 1.5, gamma, step, keep).lo, tol);
    const auto rep = verdict_at(ctx, gamma, 1e-3);
    s.text("verdict", "there does not exist an optimal equilibrium", "published", "does-not-exist",
           to_string(rep.verdict.kind));
}

}  // namespace detail

inline ReproductionRecord reproduce(const std::string& id) {
    require_example(id);
    const auto t0 = std::chrono::steady_clock::now();
    ReproductionRecord rec{id, {}, 0.0};
    detail::LineSink s{rec.lines};
    const auto ctx = example_context(id);
    if (id == "gbm-thm-small") detail::gbm_thm_small(s, ctx);
    if (id == "bessel-thm-small") detail::bessel_thm_small(s, ctx);
    if (id == "gbm-cap-ex1") detail::capped_exists(s, ctx, 0.65, 0.6, 2.0 / 3.0);
    if (id == "gbm-cap-ex2") detail::gbm_cap_ex2(s, ctx);
    if (id == "gbm-cap-ex3") detail::gbm_cap_ex3(s, ctx);
    if (id == "bessel-cap-ex1") {
        const double sbar = 0.5 * std::sqrt(8.0);
        detail::capped_exists(s, ctx, 0.7, bessel3_hump_argmax(sbar), bessel3_hump_argmax(std::sqrt(8.0)));
    }
    if (id == "bessel-cap-ex2") detail::bessel_cap_ex2(s, ctx);
    rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace divstop::harness

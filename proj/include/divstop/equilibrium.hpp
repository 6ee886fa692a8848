#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "divstop/diffusion.hpp"
#include "divstop/errors.hpp"
#include "divstop/numerics.hpp"
#include "divstop/policy.hpp"
#include "divstop/preference.hpp"
#include "divstop/valuation.hpp"

namespace divstop {

/// Uniform state grid on [state_floor, state_cap].
inline std::vector<double> default_state_grid(const ValuationContext& ctx, std::size_t n = 2001) {
    return numerics::linspace(ctx.model().state_floor, ctx.model().state_cap, n);
}

/// Snap every interval of R outward to grid points; intervals that then
/// share grid points merge.
inline Policy align_to_grid(const Policy& R, std::span<const double> grid) {
    std::vector<char> mask(grid.size(), 0);
    for (const auto& iv : R.intervals()) {
        auto lo = std::upper_bound(grid.begin(), grid.end(), iv.lo);
        std::size_t first = lo == grid.begin() ? 0 : static_cast<std::size_t>(lo - grid.begin()) - 1;
        auto hi = std::lower_bound(grid.begin(), grid.end(), iv.hi);
        std::size_t last = hi == grid.end() ? grid.size() - 1 : static_cast<std::size_t>(hi - grid.begin());
        for (std::size_t i = first; i <= last && i < grid.size(); ++i) mask[i] = 1;
    }
    return Policy::from_grid_mask(grid, mask);
}

/// Theta(R) = S_R u R on the grid.
inline Policy improve_policy(const ValuationContext& ctx, const Policy& R, std::span<const double> x_grid) {
    if (!numerics::is_sorted_strict(x_grid)) throw ArgumentError("improve_policy: grid must be increasing");
    const Policy base = R.grid_aligned() ? R : align_to_grid(R, x_grid);
    auto mask = base.grid_mask(x_grid);
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        if (mask[i]) continue;
        const double stop = ctx.attitude()(ctx.payoff(x_grid[i]));
        const double cont = continuation_value(ctx, x_grid[i], base);
        if (stop > cont + ValuationContext::tolerance(stop)) mask[i] = 1;
    }
    return Policy::from_grid_mask(x_grid, mask);
}

struct IterationTrace {
    std::vector<Policy> sequence;
    bool converged = false;
    int n_steps = 0;
    const Policy& limit() const { return sequence.back(); }
};

/// Apply Theta until the policy stops changing on the grid.
inline IterationTrace iterate_to_fixed_point(const ValuationContext& ctx, const Policy& R0,
                                             std::span<const double> x_grid, int max_iter = 50) {
    if (max_iter < 1) throw ArgumentError("iterate_to_fixed_point: max_iter must be >= 1");
    IterationTrace tr;
    tr.sequence.push_back(align_to_grid(R0, x_grid));
    for (int n = 1; n <= max_iter; ++n) {
        Policy next = improve_policy(ctx, tr.sequence.back(), x_grid);
        tr.n_steps = n;
        if (next == tr.sequence.back()) {
            tr.converged = true;
            break;
        }
        tr.sequence.push_back(std::move(next));
    }
    return tr;
}

struct BarrierCheck {
    bool holds = true;
    double worst_x = std::numeric_limits<double>::quiet_NaN();
    double worst_margin = std::numeric_limits<double>::infinity();  ///< min of Lambda(x,a) - phi(g(x))
};

/// [floor, a] is an equilibrium on the grid iff Lambda(x, a) >= phi(g(x))
/// for every grid x >= a, up to the classification tolerance.
inline BarrierCheck is_barrier_equilibrium(const ValuationContext& ctx, double a, std::span<const double> x_grid) {
    BarrierCheck out;
    for (double x : x_grid) {
        if (x < a) continue;
        const double stop = ctx.attitude()(ctx.payoff(x));
        const double margin = barrier_value(ctx, x, a) - stop;
        if (margin < out.worst_margin) {
            out.worst_margin = margin;
            out.worst_x = x;
        }
        if (margin < -ValuationContext::tolerance(stop)) out.holds = false;
    }
    return out;
}

enum class ThresholdRegime {
    Root,           ///< interior root of G(a) + 1/(K - a)
    Boundary,       ///< G(a) + 1/(K - a) > 0 throughout
    MeanThreshold,  ///< capped attitude, mean branch
    OneMinusAlpha,  ///< capped attitude, a* = 1 - alpha
    GammaRoot,      ///< capped attitude, smaller root gamma
    Degenerate,     ///< capped attitude with no discounting at rho*
    ScanDerived     ///< smallest equilibrium barrier on a grid
};

inline std::string to_string(ThresholdRegime r) {
    switch (r) {
        case ThresholdRegime::Root: return "root";
        case ThresholdRegime::Boundary: return "boundary";
        case ThresholdRegime::MeanThreshold: return "mean-threshold";
        case ThresholdRegime::OneMinusAlpha: return "one-minus-alpha";
        case ThresholdRegime::GammaRoot: return "gamma-root";
        case ThresholdRegime::Degenerate: return "degenerate";
        case ThresholdRegime::ScanDerived: return "scan-derived";
    }
    return "unknown";
}

struct ThresholdResult {
    double a_star = 0.0;
    ThresholdRegime regime = ThresholdRegime::Root;
    std::optional<double> gamma;
    double mean_threshold = std::numeric_limits<double>::quiet_NaN();  ///< capped only
    double peak_threshold = std::numeric_limits<double>::quiet_NaN();  ///< capped only
};

struct ThresholdOptions {
    bool force = false;
    std::size_t condition_points = 200;
    std::size_t scan_points = 2001;
    std::vector<double> check_grid;  ///< x-grid for the scan; empty selects [floor, 2K] with 2001 points
};

inline std::vector<double> distinct_rates(const DiscountLaw& law) {
    std::vector<double> r;
    for (const auto& n : law.nodes())
        if (r.empty() || n.r > r.back()) r.push_back(n.r);
    return r;
}

struct ConditionSummary {
    ConditionReport model;
    CiiiReport ciii;
    bool all_hold() const { return model.cii_a_holds && model.cii_b_holds && ciii.holds; }
};

inline ConditionSummary check_conditions(const ValuationContext& ctx, std::size_t n = 200) {
    const double K = ctx.strike();
    const double floor = ctx.model().state_floor;
    auto xs = numerics::linspace(floor + (K - floor) / static_cast<double>(n), K, n);
    auto vs = numerics::linspace(K / static_cast<double>(n), K, n);
    const auto rs = distinct_rates(ctx.law());
    return {check_model_conditions(ctx.model(), rs, xs), check_ciii(ctx.attitude(), vs)};
}

/// Smallest grid barrier a in [floor, K] with [floor, a] an equilibrium.
inline ThresholdResult threshold_scan(const ValuationContext& ctx, const ThresholdOptions& opt = {}) {
    const double K = ctx.strike();
    const auto checks = opt.check_grid.empty() ? numerics::linspace(ctx.model().state_floor, 2.0 * K, 2001)
                                               : opt.check_grid;
    for (double a : numerics::linspace(ctx.model().state_floor, K, opt.scan_points)) {
        if (is_barrier_equilibrium(ctx, a, checks).holds) return {a, ThresholdRegime::ScanDerived, {}};
    }
    throw NumericError("threshold_scan: no equilibrium barrier in [floor, K]");
}

/// Sum over the law of m_r(a).
inline double aggregated_log_derivative(const ValuationContext& ctx, double a) {
    return integrate_rho(ctx.law(), [&](double r) { return m_log_derivative(ctx.model(), r, a); });
}

/// a* for attitudes satisfying the structural conditions: the root of
/// G(a) + 1/(K - a) on (floor, K), or floor if the expression is positive.
inline ThresholdResult smallest_threshold_smooth(const ValuationContext& ctx, const ThresholdOptions& opt = {}) {
    if (!ctx.is_put()) {
        if (opt.force) return threshold_scan(ctx, opt);
        throw UnsupportedError("smallest_threshold_smooth: only the put payoff has a threshold equation");
    }
    const auto cond = check_conditions(ctx, opt.condition_points);
    if (!cond.all_hold()) {
        if (opt.force) return threshold_scan(ctx, opt);
        std::string why;
        if (!cond.model.cii_a_holds) why += " m_r(x) not increasing in x;";
        if (!cond.model.cii_b_holds) why += " -m_r(x) not increasing in r;";
        if (!cond.ciii.holds) why += " phi'(v) v not increasing or phi not strictly increasing;";
        throw PreconditionError("smallest_threshold_smooth: conditions fail:" + why + " use force to scan instead");
    }
    const double K = ctx.strike();
    const double floor = ctx.model().state_floor;
    auto F = [&](double a) { return aggregated_log_derivative(ctx, a) + 1.0 / (K - a); };
    const double lo = floor + 1e-12 * (K - floor);
    const double hi = K - 1e-12 * K;
    if (F(lo) > 0.0) return {floor, ThresholdRegime::Boundary, {}};
    return {numerics::bisect_root(F, lo, hi, 1e-13), ThresholdRegime::Root, {}};
}

/// x*(r) = argmax of (1 - x) x e^{s x}, s = sqrt(2r).
inline double bessel3_hump_argmax(double s) { return 0.5 + s / (2.0 * (std::sqrt(s * s + 4.0) + 2.0)); }

/// a* for the capped attitude min(v, alpha) with the put payoff, K = 1, under
/// GBM or the three-dimensional Bessel process.
inline ThresholdResult smallest_threshold_capped(const ValuationContext& ctx) {
    if (!ctx.attitude().is_capped()) throw UnsupportedError("smallest_threshold_capped: attitude is not capped");
    if (!ctx.is_put() || std::abs(ctx.strike() - 1.0) > 1e-14)
        throw UnsupportedError("smallest_threshold_capped: needs the put payoff with K = 1");
    const double alpha = ctx.attitude().alpha();
    const auto& law = ctx.law();
    ThresholdResult out;
    if (const auto* g = std::get_if<Gbm>(&ctx.model().kind)) {
        const double fbar = integrate_rho(law, [&](double r) { return gbm_exponent(*g, r); });
        const double fstar = gbm_exponent(*g, law.rho_star());
        out.mean_threshold = fbar / (fbar + 1.0);
        out.peak_threshold = fstar / (fstar + 1.0);
        if (fstar == 0.0) {
            out.a_star = 0.0;
            out.regime = ThresholdRegime::Degenerate;
            return out;
        }
        if (1.0 - alpha <= out.mean_threshold) {
            out.a_star = out.mean_threshold;
            out.regime = ThresholdRegime::MeanThreshold;
        } else if (1.0 - alpha <= out.peak_threshold) {
            out.a_star = 1.0 - alpha;
            out.regime = ThresholdRegime::OneMinusAlpha;
        } else {
            const double rhs = alpha * std::pow(1.0 - alpha, fstar);
            auto h = [&](double a) { return (1.0 - a) * std::pow(a, fstar) - rhs; };
            out.gamma = numerics::bisect_root(h, 0.0, out.peak_threshold, 1e-14);
            out.a_star = *out.gamma;
            out.regime = ThresholdRegime::GammaRoot;
        }
        return out;
    }
    const auto* b = std::get_if<Bessel>(&ctx.model().kind);
    if (!b || b->nu != 0.5) throw UnsupportedError("smallest_threshold_capped: needs GBM or the 3-dimensional Bessel process");
    const double sbar = integrate_rho(law, [](double r) { return std::sqrt(2.0 * r); });
    const double sstar = std::sqrt(2.0 * law.rho_star());
    out.mean_threshold = bessel3_hump_argmax(sbar);
    out.peak_threshold = bessel3_hump_argmax(sstar);
    if (1.0 - alpha <= out.mean_threshold) {
        out.a_star = out.mean_threshold;
        out.regime = ThresholdRegime::MeanThreshold;
    } else if (1.0 - alpha <= out.peak_threshold) {
        out.a_star = 1.0 - alpha;
        out.regime = ThresholdRegime::OneMinusAlpha;
    } else {
        const double rhs = alpha * (1.0 - alpha) * std::exp(sstar * (1.0 - alpha));
        auto h = [&](double a) { return (1.0 - a) * a * std::exp(sstar * a) - rhs; };
        out.gamma = numerics::bisect_root(h, 0.0, out.peak_threshold, 1e-14);
        out.a_star = *out.gamma;
        out.regime = ThresholdRegime::GammaRoot;
    }
    return out;
}

/// Dispatch: capped solver for capped attitudes, otherwise the smooth solver.
/// A capped attitude on a model without a capped solver needs `force`.
inline ThresholdResult smallest_threshold(const ValuationContext& ctx, const ThresholdOptions& opt = {}) {
    if (ctx.attitude().is_capped()) {
        try {
            return smallest_threshold_capped(ctx);
        } catch (const UnsupportedError& e) {
            if (opt.force) return threshold_scan(ctx, opt);
            throw PreconditionError(std::string(e.what()) + "; the capped attitude fails the attitude condition, use force to scan instead");
        }
    }
    return smallest_threshold_smooth(ctx, opt);
}

// ---------------------------------------------------------------------------
// Optimal barriers

using IntervalSet = std::vector<Interval>;

inline IntervalSet intersect(const IntervalSet& A, const IntervalSet& B) {
    IntervalSet out;
    std::size_t i = 0, j = 0;
    while (i < A.size() && j < B.size()) {
        const double lo = std::max(A[i].lo, B[j].lo);
        const double hi = std::min(A[i].hi, B[j].hi);
        if (lo <= hi) out.push_back({lo, hi});
        if (A[i].hi < B[j].hi)
            ++i;
        else
            ++j;
    }
    return out;
}

inline bool set_contains(const IntervalSet& S, double a, double tol = 0.0) {
    return std::any_of(S.begin(), S.end(), [&](const Interval& i) { return i.lo - tol <= a && a <= i.hi + tol; });
}

struct BarrierMapRow {
    double x = 0.0;
    double max_value = 0.0;
    IntervalSet maximizers;
};

/// For each x, the a-grid points whose Lambda(x, a) lies within tol_plateau
/// of the maximum, as runs [a_first, a_last].
inline std::vector<BarrierMapRow> optimal_barrier_map(const ValuationContext& ctx, std::span<const double> x_grid,
                                                      std::span<const double> a_grid, double tol_plateau = 1e-9) {
    if (a_grid.empty()) throw ArgumentError("optimal_barrier_map: empty a-grid");
    if (!numerics::is_sorted_strict(a_grid)) throw ArgumentError("optimal_barrier_map: a-grid must be increasing");
    std::vector<BarrierMapRow> rows;
    rows.reserve(x_grid.size());
    std::vector<double> vals(a_grid.size());
    for (double x : x_grid) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < a_grid.size(); ++j) {
            vals[j] = barrier_value(ctx, x, a_grid[j]);
            best = std::max(best, vals[j]);
        }
        BarrierMapRow row{x, best, {}};
        std::size_t j = 0;
        while (j < a_grid.size()) {
            if (vals[j] < best - tol_plateau) {
                ++j;
                continue;
            }
            std::size_t k = j;
            while (k + 1 < a_grid.size() && vals[k + 1] >= best - tol_plateau) ++k;
            row.maximizers.push_back({a_grid[j], a_grid[k]});
            j = k + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

enum class VerdictKind { Exists, ExistsNotSmallest, DoesNotExist };

inline std::string to_string(VerdictKind v) {
    switch (v) {
        case VerdictKind::Exists: return "exists";
        case VerdictKind::ExistsNotSmallest: return "exists-not-smallest";
        case VerdictKind::DoesNotExist: return "does-not-exist";
    }
    return "unknown";
}

struct Verdict {
    VerdictKind kind = VerdictKind::DoesNotExist;
    double a = std::numeric_limits<double>::quiet_NaN();
    IntervalSet common;               ///< intersection of all maximiser sets
    std::vector<std::size_t> witness_rows;  ///< rows whose maximiser sets have empty intersection
    bool operator==(const Verdict& o) const {
        return kind == o.kind && (kind == VerdictKind::DoesNotExist || a == o.a) && common == o.common;
    }
};

/// Intersect the maximiser sets across rows and classify.
inline Verdict verdict_from_map(const std::vector<BarrierMapRow>& rows, double a_star, double tol = 1e-12) {
    if (rows.empty()) throw ArgumentError("verdict_from_map: no rows");
    Verdict v;
    v.common = rows.front().maximizers;
    for (const auto& r : rows) v.common = intersect(v.common, r.maximizers);
    if (set_contains(v.common, a_star, tol)) {
        v.kind = VerdictKind::Exists;
        v.a = a_star;
        return v;
    }
    if (!v.common.empty()) {
        v.kind = VerdictKind::ExistsNotSmallest;
        v.a = v.common.front().lo;
        return v;
    }
    v.kind = VerdictKind::DoesNotExist;
    // Prefer two rows with disjoint maximiser sets.
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            if (intersect(rows[i].maximizers, rows[j].maximizers).empty()) {
                v.witness_rows = {i, j};
                return v;
            }
        }
    }
    // Otherwise a greedy family whose intersection is empty.
    IntervalSet run = rows.front().maximizers;
    v.witness_rows = {0};
    for (std::size_t i = 1; i < rows.size() && !run.empty(); ++i) {
        auto next = intersect(run, rows[i].maximizers);
        if (next.size() != run.size() || next != run) {
            v.witness_rows.push_back(i);
            run = std::move(next);
        }
    }
    return v;
}

struct Witness {
    double x = 0.0;
    double a_best = 0.0;      ///< a maximiser at x
    double value_best = 0.0;  ///< Lambda(x, a_best)
    double a_other = 0.0;     ///< a maximiser at the paired state
    double value_other = 0.0; ///< Lambda(x, a_other)
};

struct EquilibriumReport {
    double a_star = 0.0;
    ThresholdRegime regime = ThresholdRegime::Root;
    std::optional<double> gamma;
    Verdict verdict;
    bool verdict_barrier_is_equilibrium = false;
    std::vector<Witness> witnesses;
    std::vector<BarrierMapRow> a_double_star_map;
};

/// Barrier grid {a*} u {a* + k step} up to K.
inline std::vector<double> equilibrium_barrier_grid(double a_star, double K, double step) {
    std::vector<double> g{a_star};
    if (a_star >= K) return g;
    const auto n = static_cast<std::size_t>(std::ceil((K - a_star) / step - 1e-9));
    for (std::size_t k = 1; k <= n; ++k) g.push_back(std::min(K, a_star + step * static_cast<double>(k)));
    if (g.size() >= 2 && g[g.size() - 1] == g[g.size() - 2]) g.pop_back();
    return g;
}

/// Verdict on optimal-equilibrium existence from the barrier map. a_grid[0]
/// is taken as a*.
inline EquilibriumReport optimal_verdict(const ValuationContext& ctx, std::span<const double> x_grid,
                                         std::span<const double> a_grid, double tol_plateau = 1e-9) {
    EquilibriumReport rep;
    rep.a_star = a_grid.front();
    rep.a_double_star_map = optimal_barrier_map(ctx, x_grid, a_grid, tol_plateau);
    rep.verdict = verdict_from_map(rep.a_double_star_map, rep.a_star);
    const auto& rows = rep.a_double_star_map;
    if (rep.verdict.kind != VerdictKind::DoesNotExist) {
        rep.verdict_barrier_is_equilibrium = is_barrier_equilibrium(ctx, rep.verdict.a, x_grid).holds;
        return rep;
    }
    const auto& w = rep.verdict.witness_rows;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const auto& here = rows[w[k]];
        const auto& there = rows[w[(k + 1) % w.size()]];
        const double a_best = here.maximizers.front().lo;
        const double a_other = there.maximizers.front().lo;
        rep.witnesses.push_back({here.x, a_best, barrier_value(ctx, here.x, a_best), a_other,
                                 barrier_value(ctx, here.x, a_other)});
    }
    return rep;
}

struct AnalysisOptions {
    std::vector<double> x_grid;  ///< empty selects [floor, 2K] with 401 points
    double a_step = 1e-3;
    ThresholdOptions threshold;
};

/// Threshold followed by the verdict on a barrier grid starting at a*.
inline EquilibriumReport analyze(const ValuationContext& ctx, const AnalysisOptions& opt = {}) {
    const auto th = smallest_threshold(ctx, opt.threshold);
    const double K = ctx.strike();
    const auto xs = opt.x_grid.empty() ? numerics::linspace(ctx.model().state_floor, 2.0 * K, 401) : opt.x_grid;
    const auto as = equilibrium_barrier_grid(th.a_star, K, opt.a_step);
    auto rep = optimal_verdict(ctx, xs, as);
    rep.regime = th.regime;
    rep.gamma = th.gamma;
    return rep;
}

}  // namespace divstop

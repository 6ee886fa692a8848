#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "divstop/equilibrium.hpp"
#include "divstop/harness/config.hpp"
#include "divstop/mc_oracle.hpp"
#include "divstop/report_io.hpp"

namespace divstop::harness {

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid_n;
    bool force = false;
    std::optional<std::filesystem::path> out_dir;
};

struct RunResult {
    std::vector<std::string> failures;  ///< failed assertions; empty means pass
    std::vector<std::filesystem::path> written;
    io::json summary;
    int exit_code() const { return failures.empty() ? 0 : 1; }
};

inline void apply(ExperimentConfig& cfg, const RunOverrides& o) {
    if (o.grid_n) {
        if (*o.grid_n < 2) throw ConfigError("--grid-n: need at least 2 points");
        cfg.grids.x_n = *o.grid_n;
    }
    if (o.seed && cfg.mc) cfg.mc->cfg.seed = *o.seed;
    cfg.force = cfg.force || o.force;
    if (o.out_dir) cfg.out_dir = *o.out_dir;
}

/// conditions -> threshold -> verdict -> MC validation, writing the
/// artifacts named in cfg.outputs into cfg.out_dir.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
    const auto& ctx = cfg.ctx();
    if (cfg.mc)
        for (const auto& n : ctx.law().nodes())
            if (!(divstop::detail::simulation_rate(ctx.model(), n.r) > 0.0))
                throw ConfigError("config: field 'mc': zero-rate atoms cannot be simulated under truncation");
    RunResult res;
    const auto xs = cfg.x_grid();
    const auto out = [&](const std::string& name) { return cfg.out_dir / name; };
    const auto wants = [&](const char* s) { return cfg.outputs.count(s) > 0; };
    auto emit_json = [&](const std::string& name, const io::json& j) {
        io::write_atomic(out(name), io::dump(j));
        res.written.push_back(out(name));
    };

    io::json conditions;
    {
        const double K = ctx.strike();
        const double floor = ctx.model().state_floor;
        const auto cx = numerics::linspace(floor + (K - floor) / 200.0, K, 200);
        const auto rs = cfg.grids.r.empty() ? distinct_rates(ctx.law()) : cfg.grids.r;
        const auto model_rep = check_model_conditions(ctx.model(), rs, cx);
        const auto att_rep = check_ciii(ctx.attitude(), numerics::linspace(K / 200.0, K, 200));
        conditions = {{"model", io::to_json(model_rep)}, {"attitude", io::to_json(att_rep)}};
        if (wants("conditions")) emit_json("conditions.json", conditions);
    }

    ThresholdOptions topt;
    topt.force = cfg.force;
    topt.check_grid = xs;
    const auto th = smallest_threshold(ctx, topt);
    if (wants("threshold")) emit_json("threshold.json", io::to_json(th));

    const auto as = equilibrium_barrier_grid(th.a_star, ctx.strike(), cfg.grids.a_step);
    auto rep = optimal_verdict(ctx, xs, as);
    rep.regime = th.regime;
    rep.gamma = th.gamma;
    const auto at_star = is_barrier_equilibrium(ctx, th.a_star, xs);
    if (!at_star.holds)
        res.failures.push_back("threshold barrier " + io::fmt(th.a_star) + " is not an equilibrium on the grid (x = " +
                               io::fmt(at_star.worst_x) + ")");
    if (rep.verdict.kind != VerdictKind::DoesNotExist && !rep.verdict_barrier_is_equilibrium)
        res.failures.push_back("optimal barrier " + io::fmt(rep.verdict.a) + " is not an equilibrium on the grid");
    if (wants("barrier_map")) {
        io::write_barrier_map(out("barrier_map.csv"), rep.a_double_star_map, th.a_star, cfg.example.value_or(""));
        res.written.push_back(out("barrier_map.csv"));
    }

    io::json mc = io::json::array();
    if (cfg.mc) {
        for (const auto& c : cfg.mc->checks) {
            const auto R = Policy::barrier(ctx.model().state_floor, c.a);
            const auto est = estimate_J(ctx, c.x, R, cfg.mc->cfg);
            const double closed = barrier_value(ctx, c.x, c.a);
            const double se = est.aggregated.std_error;
            const double diff = est.aggregated.mean - closed;
            const bool ok = se > 0.0 ? std::abs(diff) <= 3.5 * se : std::abs(diff) <= ValuationContext::tolerance(closed);
            mc.push_back({{"x", c.x},
                          {"a", c.a},
                          {"closed_form", closed},
                          {"estimate", io::to_json(est.aggregated)},
                          {"z", se > 0.0 ? io::json(diff / se) : io::json(nullptr)},
                          {"pass", ok}});
            if (!ok)
                res.failures.push_back("mc check at x = " + io::fmt(c.x) + ", a = " + io::fmt(c.a) +
                                       " is outside 3.5 standard errors");
        }
        if (wants("mc")) emit_json("mc.json", {{"scheme", to_string(cfg.mc->cfg.scheme)},
                                               {"n_paths", cfg.mc->cfg.n_paths},
                                               {"dt", cfg.mc->cfg.dt},
                                               {"seed", cfg.mc->cfg.seed},
                                               {"checks", mc}});
    }

    auto report = io::to_json(rep);
    report["threshold"] = io::to_json(th);
    report["conditions"] = conditions;
    report["threshold_barrier_check"] = {{"holds", at_star.holds},
                                         {"worst_x", at_star.worst_x},
                                         {"worst_margin", at_star.worst_margin}};
    report["grid"] = {{"x_lo", xs.front()}, {"x_hi", xs.back()}, {"x_n", xs.size()}, {"a_step", cfg.grids.a_step}};
    if (cfg.example) report["example"] = *cfg.example;
    report["failures"] = res.failures;
    if (wants("report")) emit_json("report.json", report);
    res.summary = {{"a_star", th.a_star},
                   {"regime", to_string(th.regime)},
                   {"verdict", to_string(rep.verdict.kind)},
                   {"failures", res.failures}};
    return res;
}

}  // namespace divstop::harness

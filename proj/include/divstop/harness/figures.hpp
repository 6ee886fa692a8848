#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "divstop/equilibrium.hpp"
#include "divstop/harness/examples.hpp"
#include "divstop/report_io.hpp"

namespace divstop::harness {

/// Region of (a, x) by how many rate atoms the cap binds on:
/// x < a "red", all atoms capped "yellow", some "green", none "blue".
inline std::string region_label(const ValuationContext& ctx, double a, double x) {
    if (x < a) return "red";
    const double alpha = ctx.attitude().alpha();
    const double ga = ctx.payoff(a);
    std::size_t capped = 0, total = 0;
    for (const auto& n : ctx.law().nodes()) {
        ++total;
        if (ga * hit_transform(ctx.model(), n.r, x, a).value >= alpha) ++capped;
    }
    if (capped == total) return "yellow";
    return capped > 0 ? "green" : "blue";
}

struct FigureOptions {
    std::size_t region_n = 301;  ///< per axis of the (a, x) region grid
    std::size_t map_n = 201;     ///< states in the a** map
    double a_step = 1e-4;
};

struct FigureFiles {
    std::vector<std::filesystem::path> written;
};

/// Region grid (capped examples only) and the a**(x) map for an example.
inline FigureFiles emit_figure_data(const std::string& id, const std::filesystem::path& out_dir,
                                    const FigureOptions& opt = {}) {
    require_example(id);
    const auto ctx = example_context(id);
    const auto th = smallest_threshold(ctx);
    FigureFiles files;
    if (ctx.attitude().is_capped()) {
        const auto as = numerics::linspace(0.55, 0.85, opt.region_n);
        const auto xs = numerics::linspace(0.5, 1.1, opt.region_n);
        std::ostringstream os;
        os << "a,x,region\n";
        for (double a : as)
            for (double x : xs) os << io::fmt(a) << ',' << io::fmt(x) << ',' << region_label(ctx, a, x) << '\n';
        const auto p = out_dir / (id + "_regions.csv");
        io::write_atomic(p, os.str());
        io::write_schema(p,
                         {{"a", "barrier"},
                          {"x", "state"},
                          {"region", "red: x < a; yellow: cap binds for every rate atom; green: for some; blue: for none"}},
                         {{"a_star", th.a_star}, {"example", id}, {"note", "barriers below a_star are not equilibria"}});
        files.written.push_back(p);
    }
    const auto xs = numerics::linspace(0.5, 1.5, opt.map_n);
    const auto as = equilibrium_barrier_grid(th.a_star, ctx.strike(), opt.a_step);
    const auto rows = optimal_barrier_map(ctx, xs, as);
    const auto p = out_dir / (id + "_a_double_star.csv");
    io::write_barrier_map(p, rows, th.a_star, id);
    files.written.push_back(p);
    return files;
}

}  // namespace divstop::harness

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "divstop.hpp"
#include "divstop/harness/config.hpp"
#include "divstop/harness/examples.hpp"
#include "divstop/harness/figures.hpp"
#include "divstop/harness/oracle_suite.hpp"
#include "divstop/harness/reproduce.hpp"
#include "divstop/harness/run.hpp"

namespace {

using namespace divstop;
namespace h = divstop::harness;

constexpr int kPass = 0;
constexpr int kAssertion = 1;
constexpr int kConfig = 2;
constexpr int kNumeric = 3;

io::json record_json(const h::ReproductionRecord& rec) {
    io::json lines = io::json::array();
    for (const auto& l : rec.lines) {
        io::json j{{"label", l.label}, {"check", l.check}, {"source", l.source}, {"pass", l.pass}};
        if (l.expected_text.empty()) {
            j["expected"] = l.expected;
            j["computed"] = l.computed;
            j["tolerance"] = l.tolerance;
        } else {
            j["expected"] = l.expected_text;
            j["computed"] = l.computed_text;
        }
        lines.push_back(j);
    }
    return {{"example_id", rec.example_id}, {"pass", rec.all_pass()}, {"runtime_s", rec.runtime_s}, {"lines", lines}};
}

void print_record(const h::ReproductionRecord& rec) {
    std::printf("%s (%.2f s)\n", rec.example_id.c_str(), rec.runtime_s);
    for (const auto& l : rec.lines) {
        if (l.expected_text.empty())
            std::printf("  [%s] %-22s expected %.12g computed %.17g tol %.1e  (%s; %s)\n", l.pass ? "PASS" : "FAIL",
                        l.label.c_str(), l.expected, l.computed, l.tolerance, l.source.c_str(), l.check.c_str());
        else
            std::printf("  [%s] %-22s expected %s computed %s  (%s; %s)\n", l.pass ? "PASS" : "FAIL", l.label.c_str(),
                        l.expected_text.c_str(), l.computed_text.c_str(), l.source.c_str(), l.check.c_str());
    }
}

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const ArgumentError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const ConventionError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const UnsupportedError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const PreconditionError& e) {
        std::fprintf(stderr, "precondition failed: %s\n", e.what());
        return kAssertion;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kNumeric;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kNumeric;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equilibrium stopping under diverse discount rates"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid_n;
    bool force = false;
    app.add_option("--seed", seed, "override the Monte Carlo seed");
    app.add_option("--grid-n", grid_n, "override the number of state grid points");
    app.add_flag("--force", force, "scan for the threshold when the structural conditions fail");

    std::string config_path;
    std::optional<std::string> out_dir;
    auto* run = app.add_subcommand("run", "run the pipeline declared in a config file");
    run->add_option("config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "artifact directory (overrides out_dir)");

    std::string repro_id;
    std::optional<std::string> repro_out;
    auto* repro = app.add_subcommand("reproduce", "recompute a worked example and compare with its expected values");
    repro->add_option("example", repro_id, "example id, or 'all'")->required();
    repro->add_option("--out", repro_out, "write the record as JSON into this directory");

    std::string fig_id;
    std::string fig_out = "figures";
    auto* fig = app.add_subcommand("emit-figure", "write region and optimal-barrier CSVs for an example");
    fig->add_option("example", fig_id, "example id")->required();
    fig->add_option("--out", fig_out, "output directory");

    std::size_t oracle_paths = 100000;
    double oracle_dt = 1e-7;
    std::optional<std::string> oracle_out;
    auto* oracle = app.add_subcommand("oracle-check", "Monte Carlo against the closed-form transforms");
    oracle->add_option("--paths", oracle_paths, "paths per line");
    oracle->add_option("--dt", oracle_dt, "step next to a boundary");
    oracle->add_option("--out", oracle_out, "write results as JSON into this directory");

    auto* list = app.add_subcommand("list-examples", "list the built-in example ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kConfig;
    }

    if (*list) {
        for (const auto& e : h::example_catalog()) std::printf("%-16s %s\n", e.id.c_str(), e.summary.c_str());
        return kPass;
    }

    if (*run) {
        return guarded([&] {
            auto cfg = h::load_config(config_path);
            h::RunOverrides o;
            o.seed = seed;
            o.grid_n = grid_n;
            o.force = force;
            if (out_dir) o.out_dir = *out_dir;
            h::apply(cfg, o);
            const auto res = h::run_experiment(cfg);
            std::cout << io::dump(res.summary);
            for (const auto& p : res.written) std::fprintf(stderr, "wrote %s\n", p.string().c_str());
            return res.exit_code();
        });
    }

    if (*repro) {
        return guarded([&] {
            std::vector<std::string> ids;
            if (repro_id == "all")
                ids = h::example_ids();
            else
                ids.push_back(repro_id);
            for (const auto& id : ids) h::require_example(id);
            bool ok = true;
            for (const auto& id : ids) {
                const auto rec = h::reproduce(id);
                print_record(rec);
                if (repro_out) io::write_atomic(std::filesystem::path(*repro_out) / (id + ".json"), io::dump(record_json(rec)));
                ok = ok && rec.all_pass();
            }
            return ok ? kPass : kAssertion;
        });
    }

    if (*fig) {
        return guarded([&] {
            h::FigureOptions opt;
            if (grid_n) {
                if (*grid_n < 2) throw ConfigError("--grid-n: need at least 2 points");
                opt.region_n = opt.map_n = *grid_n;
            }
            const auto files = h::emit_figure_data(fig_id, fig_out, opt);
            for (const auto& p : files.written) std::printf("wrote %s\n", p.string().c_str());
            return kPass;
        });
    }

    if (*oracle) {
        return guarded([&] {
            McConfig cfg;
            cfg.n_paths = oracle_paths;
            cfg.dt = oracle_dt;
            if (seed) cfg.seed = *seed;
            cfg.validate();
            const auto suite = h::run_oracle_suite(cfg);
            io::json lines = io::json::array();
            for (const auto* group : {&suite.hits, &suite.policies})
                for (const auto& l : *group) {
                    std::printf("[%s] %-44s closed %.10f mc %.10f se %.2e z %+.2f\n", l.pass ? "PASS" : "FAIL",
                                l.label.c_str(), l.closed, l.mc.mean, l.mc.std_error, l.z);
                    lines.push_back({{"label", l.label},
                                     {"closed_form", l.closed},
                                     {"estimate", io::to_json(l.mc)},
                                     {"z", l.z},
                                     {"pass", l.pass}});
                }
            std::printf("hitting transforms inside 3.5 SE: %zu of %zu; policies inside: %s\n", suite.hit_passes(),
                        suite.hits.size(), suite.pass() ? "yes" : "no");
            if (oracle_out)
                io::write_atomic(std::filesystem::path(*oracle_out) / "oracle_check.json",
                                 io::dump({{"seed", cfg.seed}, {"n_paths", cfg.n_paths}, {"dt", cfg.dt},
                                           {"pass", suite.pass()}, {"lines", lines}}));
            return suite.pass() ? kPass : kAssertion;
        });
    }
    return kConfig;
}

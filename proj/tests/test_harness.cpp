#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "divstop/harness/config.hpp"
#include "divstop/harness/examples.hpp"
#include "divstop/report_io.hpp"

using namespace divstop;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("divstop_harness_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(DIVSTOP_CLI) + " " + args + " > " + (scratch() / "stdout.txt").string() + " 2> " +
                            (scratch() / "stderr.txt").string();
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string configs(const char* name) { return (fs::path(DIVSTOP_CONFIGS) / name).string(); }

harness::ExperimentConfig parse(const std::string& yaml) { return harness::parse_config(YAML::Load(yaml)); }

}  // namespace

TEST(Config, MinimalModel) {
    const auto cfg = parse("model: {kind: gbm, mu: 0.02, sigma: 0.2}\n"
                           "law: {atoms: [{r: 0.02, w: 1}, {r: 0.06, w: 1}]}\n"
                           "attitude: {kind: power, p: 0.5}\n");
    EXPECT_TRUE(cfg.ctx().model().is_gbm());
    EXPECT_EQ(cfg.ctx().law().atoms().size(), 2u);
    EXPECT_EQ(cfg.x_grid().back(), 2.0);
    EXPECT_EQ(cfg.outputs.count("mc"), 0u);
}

TEST(Config, UnknownKeyNamesLine) {
    try {
        parse("model: {kind: gbm, mu: 0.02, sigma: 0.2}\n"
              "law: {atoms: [{r: 0.02, w: 1}]}\n"
              "attitude: {kind: power, p: 0.5, q: 1}\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("config:3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'attitude.q'"), std::string::npos) << msg;
    }
}

TEST(Config, MissingAndMalformedFields) {
    EXPECT_THROW(parse("model: {kind: gbm, mu: 0.02}\nlaw: {atoms: [{r: 0.1, w: 1}]}\nattitude: {kind: linear}\n"),
                 ConfigError);
    EXPECT_THROW(parse("model: {kind: gbm, mu: x, sigma: 0.2}\nlaw: {atoms: [{r: 0.1, w: 1}]}\nattitude: {kind: linear}\n"),
                 ConfigError);
    EXPECT_THROW(parse("model: {kind: gbm, mu: 0.02, sigma: -1}\nlaw: {atoms: [{r: 0.1, w: 1}]}\nattitude: {kind: linear}\n"),
                 ConfigError);
    EXPECT_THROW(parse("model: {kind: bessel, nu: 0.5}\nlaw: {atoms: [{r: 0, w: 1}, {r: 1, w: 1}]}\nattitude: {kind: linear}\n"),
                 ConfigError);
    EXPECT_THROW(parse("example: gbm-cap-ex3\nstrike: 2\n"), ConfigError);
    EXPECT_THROW(parse("example: gbm-cap-ex3\noutputs: [threshold, mc]\n"), ConfigError);
    EXPECT_THROW(parse("law: {atoms: [{r: 0.1, w: 1}]}\n"), ConfigError);
}

TEST(Config, UnknownExampleListsIds) {
    try {
        parse("example: nope\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("gbm-cap-ex3"), std::string::npos);
    }
}

TEST(Config, ShippedConfigsParse) {
    for (const char* f : {"gbm_power.yaml", "gbm_cap_ex3.yaml", "bessel_mc.yaml", "csv_law.yaml", "capped_needs_force.yaml"})
        EXPECT_NO_THROW(harness::load_config(configs(f))) << f;
    const auto csv = harness::load_config(configs("csv_law.yaml"));
    EXPECT_DOUBLE_EQ(csv.ctx().law().atoms().front().w, 0.5);
    EXPECT_THROW(harness::load_config(configs("missing.yaml")), ConfigError);
}

TEST(ReportIo, SeventeenSignificantDigits) {
    EXPECT_EQ(io::fmt(0.1), "0.10000000000000001");
    const std::string s = io::dump(io::json{{"v", 1.0 / 3.0}, {"bad", std::nan("")}});
    EXPECT_NE(s.find("0.33333333333333331"), std::string::npos) << s;
    EXPECT_NE(s.find("null"), std::string::npos) << s;
}

TEST(ReportIo, AtomicWriteLeavesNoTemporaries) {
    const auto p = scratch() / "atomic" / "a.json";
    io::write_atomic(p, "one");
    io::write_atomic(p, "two");
    EXPECT_EQ(slurp(p), "two");
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(p.parent_path())) ++n;
    EXPECT_EQ(n, 1u);
}

TEST(ReportIo, BarrierMapCsvRoundTrip) {
    const auto ctx = harness::example_context("gbm-cap-ex3");
    const auto th = smallest_threshold(ctx);
    const auto xs = numerics::linspace(0.0, 2.0, 101);
    const auto as = equilibrium_barrier_grid(th.a_star, 1.0, 1e-3);
    const auto rep = optimal_verdict(ctx, xs, as);
    const auto p = scratch() / "map" / "barrier_map.csv";
    io::write_barrier_map(p, rep.a_double_star_map, th.a_star, "gbm-cap-ex3");
    ASSERT_TRUE(fs::exists(p.string() + ".schema.json"));
    std::ifstream in(p);
    const auto rows = io::read_barrier_map_csv(in);
    ASSERT_EQ(rows.size(), rep.a_double_star_map.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].x, rep.a_double_star_map[i].x);
        EXPECT_EQ(rows[i].maximizers, rep.a_double_star_map[i].maximizers);
    }
    EXPECT_EQ(verdict_from_map(rows, th.a_star), rep.verdict);
    std::istringstream bad("x,a\n1,2\n");
    EXPECT_THROW(io::read_barrier_map_csv(bad), ConfigError);
}

TEST(Cli, ListExamples) {
    EXPECT_EQ(cli("list-examples"), 0);
    const auto out = slurp(scratch() / "stdout.txt");
    for (const auto& id : harness::example_ids()) EXPECT_NE(out.find(id), std::string::npos) << id;
}

TEST(Cli, UsageErrorsAreConfigErrors) {
    EXPECT_EQ(cli(""), 2);
    EXPECT_EQ(cli("frobnicate"), 2);
    EXPECT_EQ(cli("reproduce no-such-example"), 2);
    EXPECT_EQ(cli("run " + configs("missing.yaml")), 2);
    EXPECT_EQ(cli("emit-figure gbm-cap-ex3 --grid-n 1 --out " + (scratch() / "fig").string()), 2);
}

TEST(Cli, RunWritesArtifacts) {
    const auto out = scratch() / "run_power";
    ASSERT_EQ(cli("run " + configs("gbm_power.yaml") + " --out " + out.string()), 0) << slurp(scratch() / "stderr.txt");
    for (const char* f : {"threshold.json", "report.json", "conditions.json", "barrier_map.csv", "barrier_map.csv.schema.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto th = io::json::parse(slurp(out / "threshold.json"));
    EXPECT_NEAR(th["a_star"].get<double>(), 0.6, 1e-8);
    const auto rep = io::json::parse(slurp(out / "report.json"));
    EXPECT_EQ(rep["verdict"]["kind"], "exists");
}

TEST(Cli, GridOverrideChangesReportedGrid) {
    const auto out = scratch() / "run_grid";
    ASSERT_EQ(cli("--grid-n 101 run " + configs("gbm_power.yaml") + " --out " + out.string()), 0);
    const auto rep = io::json::parse(slurp(out / "report.json"));
    EXPECT_EQ(rep["grid"]["x_n"].get<int>(), 101);
}

TEST(Cli, PreconditionFailureNeedsForce) {
    const auto out = scratch() / "run_force";
    EXPECT_EQ(cli("run " + configs("capped_needs_force.yaml") + " --out " + out.string()), 1);
    EXPECT_NE(slurp(scratch() / "stderr.txt").find("precondition"), std::string::npos);
    EXPECT_EQ(cli("--force run " + configs("capped_needs_force.yaml") + " --out " + out.string()), 0)
        << slurp(scratch() / "stderr.txt");
    const auto th = io::json::parse(slurp(out / "threshold.json"));
    EXPECT_EQ(th["regime"], "scan-derived");
}

TEST(Cli, MonteCarloChecksAndSeed) {
    const auto a = scratch() / "mc_a";
    const auto b = scratch() / "mc_b";
    ASSERT_EQ(cli("run " + configs("bessel_mc.yaml") + " --out " + a.string()), 0) << slurp(scratch() / "stderr.txt");
    ASSERT_EQ(cli("--seed 8 run " + configs("bessel_mc.yaml") + " --out " + b.string()), 0);
    const auto ja = io::json::parse(slurp(a / "mc.json"));
    const auto jb = io::json::parse(slurp(b / "mc.json"));
    EXPECT_EQ(ja["seed"].get<int>(), 7);
    EXPECT_EQ(jb["seed"].get<int>(), 8);
    EXPECT_NE(ja["checks"][0]["estimate"]["mean"], jb["checks"][0]["estimate"]["mean"]);
}

TEST(Cli, ReproducePassingExampleWritesRecord) {
    const auto out = scratch() / "repro";
    EXPECT_EQ(cli("reproduce gbm-cap-ex1 --out " + out.string()), 0) << slurp(scratch() / "stdout.txt");
    const auto rec = io::json::parse(slurp(out / "gbm-cap-ex1.json"));
    EXPECT_TRUE(rec["pass"].get<bool>());
}

TEST(Cli, EmitFigureData) {
    const auto out = scratch() / "fig";
    ASSERT_EQ(cli("emit-figure gbm-cap-ex3 --grid-n 61 --out " + out.string()), 0) << slurp(scratch() / "stderr.txt");
    for (const char* f : {"gbm-cap-ex3_regions.csv", "gbm-cap-ex3_regions.csv.schema.json", "gbm-cap-ex3_a_double_star.csv",
                          "gbm-cap-ex3_a_double_star.csv.schema.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    std::ifstream in(out / "gbm-cap-ex3_a_double_star.csv");
    const auto rows = io::read_barrier_map_csv(in);
    EXPECT_EQ(rows.size(), 61u);
    const auto regions = slurp(out / "gbm-cap-ex3_regions.csv");
    for (const char* label : {"red", "yellow", "green", "blue"}) EXPECT_NE(regions.find(label), std::string::npos) << label;
}

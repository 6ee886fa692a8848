#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "divstop/errors.hpp"
#include "divstop/harness/examples.hpp"
#include "divstop/mc_oracle.hpp"
#include "divstop/numerics.hpp"
#include "divstop/valuation.hpp"

namespace divstop::harness {

struct GridConfig {
    double x_lo = 0.0;
    double x_hi = 0.0;  ///< 0 selects 2K
    std::size_t x_n = 401;
    double a_step = 1e-3;
    std::vector<double> r;  ///< rates for the model-condition scan; empty selects the law's rates
};

/// Barrier-policy check for the MC stage: J(x, [floor, a]) against Lambda(x, a).
struct McCheck {
    double x = 0.0;
    double a = 0.0;
};

struct McSection {
    McConfig cfg;
    std::vector<McCheck> checks;
};

struct ExperimentConfig {
    std::optional<std::string> example;
    std::optional<ValuationContext> context;
    GridConfig grids;
    std::optional<McSection> mc;
    std::set<std::string> outputs{"threshold", "report", "barrier_map", "conditions"};
    bool force = false;
    std::filesystem::path out_dir = "out";

    const ValuationContext& ctx() const { return *context; }
    std::vector<double> x_grid() const {
        const double hi = grids.x_hi > 0.0 ? grids.x_hi : 2.0 * ctx().strike();
        return numerics::linspace(grids.x_lo, hi, grids.x_n);
    }
};

inline const std::set<std::string>& known_outputs() {
    static const std::set<std::string> s{"threshold", "report", "barrier_map", "conditions", "mc"};
    return s;
}

namespace detail {

inline std::string where(const YAML::Node& n, const std::string& field) {
    const auto m = n.Mark();
    std::string s = "config";
    if (m.line >= 0) s += ":" + std::to_string(m.line + 1);
    return s + ": field '" + field + "'";
}

template <class T>
T as(const YAML::Node& n, const std::string& field) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where(n, field) + ": cannot read value '" + (n.IsScalar() ? n.Scalar() : "<node>") + "'");
    }
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

template <class T>
T get(const YAML::Node& parent, const std::string& key, const std::string& path) {
    const auto n = parent[key];
    if (!n) throw ConfigError(where(parent, join(path, key)) + ": missing");
    return as<T>(n, join(path, key));
}

template <class T>
T get_or(const YAML::Node& parent, const std::string& key, const std::string& path, T fallback) {
    const auto n = parent[key];
    return n ? as<T>(n, join(path, key)) : fallback;
}

inline void only_keys(const YAML::Node& n, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!n.IsMap()) throw ConfigError(where(n, path) + ": expected a mapping");
    for (const auto& kv : n) {
        const auto k = kv.first.as<std::string>();
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ConfigError(where(kv.first, join(path, k)) + ": unknown key");
    }
}

/// Polynomial sum_i c_i x^i.
inline std::function<double(double)> polynomial(std::vector<double> c) {
    return [c = std::move(c)](double x) {
        double v = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
        return v;
    };
}

inline DiffusionSpec parse_model(const YAML::Node& n) {
    const std::string kind = get<std::string>(n, "kind", "model");
    try {
        if (kind == "gbm") {
            only_keys(n, "model", {"kind", "mu", "sigma", "state_cap"});
            return DiffusionSpec::gbm(get<double>(n, "mu", "model"), get<double>(n, "sigma", "model"),
                                      get_or<double>(n, "state_cap", "model", 10.0));
        }
        if (kind == "bessel") {
            only_keys(n, "model", {"kind", "nu", "state_cap"});
            return DiffusionSpec::bessel(get<double>(n, "nu", "model"), get_or<double>(n, "state_cap", "model", 10.0));
        }
        if (kind == "generic") {
            only_keys(n, "model", {"kind", "a", "b", "c", "state_floor", "state_cap", "riccati_start"});
            Generic g;
            g.a = polynomial(get<std::vector<double>>(n, "a", "model"));
            g.b = polynomial(get<std::vector<double>>(n, "b", "model"));
            g.c = polynomial(get_or<std::vector<double>>(n, "c", "model", {0.0}));
            g.riccati_start = get_or<double>(n, "riccati_start", "model", 0.0);
            return DiffusionSpec::generic(std::move(g), get_or<double>(n, "state_floor", "model", 0.0),
                                          get_or<double>(n, "state_cap", "model", 10.0));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where(n, "model") + ": " + e.what());
    }
    throw ConfigError(where(n["kind"], "model.kind") + ": expected gbm, bessel or generic, got '" + kind + "'");
}

inline DiscountLaw parse_law(const YAML::Node& n, const std::filesystem::path& base) {
    only_keys(n, "law", {"space", "atoms", "csv", "density", "zero_rate"});
    const std::string space = get_or<std::string>(n, "space", "law", "rate");
    if (space != "rate" && space != "exponent")
        throw ConfigError(where(n["space"], "law.space") + ": expected rate or exponent");
    const bool f = space == "exponent";
    const int sources = (n["atoms"] ? 1 : 0) + (n["csv"] ? 1 : 0) + (n["density"] ? 1 : 0);
    if (sources != 1) throw ConfigError(where(n, "law") + ": give exactly one of atoms, csv, density");
    try {
        if (const auto a = n["atoms"]) {
            if (!a.IsSequence()) throw ConfigError(where(a, "law.atoms") + ": expected a list");
            std::vector<RateAtom> atoms;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const auto p = "law.atoms[" + std::to_string(i) + "]";
                only_keys(a[i], p, {"r", "w"});
                atoms.push_back({get<double>(a[i], "r", p), get<double>(a[i], "w", p)});
            }
            return DiscountLaw::from_weights(std::move(atoms), f);
        }
        if (const auto c = n["csv"]) {
            std::filesystem::path p = as<std::string>(c, "law.csv");
            if (p.is_relative()) p = base / p;
            return DiscountLaw::from_csv_file(p.string(), f);
        }
        const auto d = n["density"];
        only_keys(d, "law.density", {"kind", "lo", "hi", "mean", "nodes"});
        const std::string kind = get<std::string>(d, "kind", "law.density");
        const double lo = get_or<double>(d, "lo", "law.density", 0.0);
        const double hi = get<double>(d, "hi", "law.density");
        const int nodes = get_or<int>(d, "nodes", "law.density", 64);
        if (kind == "uniform") return DiscountLaw::from_density([](double) { return 1.0; }, lo, hi, nodes, f);
        if (kind == "exponential") {
            const double mean = get<double>(d, "mean", "law.density");
            if (!(mean > 0.0)) throw ConfigError(where(d["mean"], "law.density.mean") + ": must be positive");
            return DiscountLaw::from_density([mean](double r) { return std::exp(-r / mean); }, lo, hi, nodes, f);
        }
        throw ConfigError(where(d["kind"], "law.density.kind") + ": expected uniform or exponential");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where(n, "law") + ": " + e.what());
    }
}

inline ZeroRateConvention parse_zero_rate(const YAML::Node& law) {
    const std::string z = get_or<std::string>(law, "zero_rate", "law", "reject");
    if (z == "reject") return ZeroRateConvention::Reject;
    if (z == "transform-limit") return ZeroRateConvention::TransformLimit;
    throw ConfigError(where(law["zero_rate"], "law.zero_rate") + ": expected reject or transform-limit");
}

inline AttitudeFunction parse_attitude(const YAML::Node& n) {
    const std::string kind = get<std::string>(n, "kind", "attitude");
    try {
        if (kind == "linear") {
            only_keys(n, "attitude", {"kind"});
            return AttitudeFunction::linear();
        }
        if (kind == "power") {
            only_keys(n, "attitude", {"kind", "p"});
            return AttitudeFunction::power(get<double>(n, "p", "attitude"));
        }
        if (kind == "log") {
            only_keys(n, "attitude", {"kind"});
            return AttitudeFunction::log();
        }
        if (kind == "capped") {
            only_keys(n, "attitude", {"kind", "alpha"});
            return AttitudeFunction::capped(get<double>(n, "alpha", "attitude"));
        }
        if (kind == "tabulated") {
            only_keys(n, "attitude", {"kind", "v", "phi"});
            return AttitudeFunction::tabulated(get<std::vector<double>>(n, "v", "attitude"),
                                               get<std::vector<double>>(n, "phi", "attitude"));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where(n, "attitude") + ": " + e.what());
    }
    throw ConfigError(where(n["kind"], "attitude.kind") + ": expected linear, power, log, capped or tabulated");
}

inline McScheme parse_scheme(const YAML::Node& n) {
    const std::string s = as<std::string>(n, "mc.scheme");
    for (auto k : {McScheme::Auto, McScheme::Euler, McScheme::ExactBessel3, McScheme::ExactGbmIncrement})
        if (to_string(k) == s) return k;
    throw ConfigError(where(n, "mc.scheme") + ": expected auto, euler, exact_bessel3 or exact_gbm_increment");
}

inline McSection parse_mc(const YAML::Node& n) {
    only_keys(n, "mc", {"n_paths", "dt", "horizon", "seed", "scheme", "step_sigmas", "euler_step_sigmas", "checks"});
    McSection m;
    auto& c = m.cfg;
    c.n_paths = get_or<std::size_t>(n, "n_paths", "mc", c.n_paths);
    c.dt = get_or<double>(n, "dt", "mc", c.dt);
    c.horizon = get_or<double>(n, "horizon", "mc", c.horizon);
    c.seed = get_or<std::uint64_t>(n, "seed", "mc", c.seed);
    c.step_sigmas = get_or<double>(n, "step_sigmas", "mc", c.step_sigmas);
    c.euler_step_sigmas = get_or<double>(n, "euler_step_sigmas", "mc", c.euler_step_sigmas);
    if (n["scheme"]) c.scheme = parse_scheme(n["scheme"]);
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw ConfigError(where(n, "mc") + ": " + e.what());
    }
    if (const auto ch = n["checks"]) {
        if (!ch.IsSequence()) throw ConfigError(where(ch, "mc.checks") + ": expected a list");
        for (std::size_t i = 0; i < ch.size(); ++i) {
            const auto p = "mc.checks[" + std::to_string(i) + "]";
            only_keys(ch[i], p, {"x", "a"});
            m.checks.push_back({get<double>(ch[i], "x", p), get<double>(ch[i], "a", p)});
        }
    }
    return m;
}

inline GridConfig parse_grids(const YAML::Node& n) {
    only_keys(n, "grids", {"x_lo", "x_hi", "x_n", "a_step", "r"});
    GridConfig g;
    g.x_lo = get_or<double>(n, "x_lo", "grids", g.x_lo);
    g.x_hi = get_or<double>(n, "x_hi", "grids", g.x_hi);
    g.x_n = get_or<std::size_t>(n, "x_n", "grids", g.x_n);
    g.a_step = get_or<double>(n, "a_step", "grids", g.a_step);
    g.r = get_or<std::vector<double>>(n, "r", "grids", {});
    if (g.x_n < 2) throw ConfigError(where(n["x_n"], "grids.x_n") + ": need at least 2 points");
    if (g.x_hi != 0.0 && !(g.x_hi > g.x_lo)) throw ConfigError(where(n, "grids") + ": need x_lo < x_hi");
    if (!(g.a_step > 0.0)) throw ConfigError(where(n["a_step"], "grids.a_step") + ": must be positive");
    if (!numerics::is_sorted_strict(std::span<const double>(g.r)))
        throw ConfigError(where(n["r"], "grids.r") + ": must be strictly increasing");
    return g;
}

}  // namespace detail

/// Parse a config document. `base` resolves relative paths such as law CSVs.
inline ExperimentConfig parse_config(const YAML::Node& root, const std::filesystem::path& base = ".") {
    using namespace detail;
    if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");
    only_keys(root, "", {"example", "model", "law", "attitude", "strike", "grids", "mc", "outputs", "force", "out_dir"});
    ExperimentConfig cfg;
    if (root["example"]) {
        cfg.example = as<std::string>(root["example"], "example");
        try {
            require_example(*cfg.example);
        } catch (const ConfigError& e) {
            throw ConfigError(where(root["example"], "example") + ": " + e.what());
        }
    }
    const bool have_model = root["model"] && root["law"] && root["attitude"];
    if (!cfg.example && !have_model)
        throw ConfigError("config: give either 'example' or all of 'model', 'law' and 'attitude'");
    if (cfg.example && (root["model"] || root["law"] || root["attitude"] || root["strike"]))
        throw ConfigError(where(root, "example") + ": cannot be combined with model, law, attitude or strike");
    if (cfg.example) {
        cfg.context = example_context(*cfg.example);
    } else {
        auto model = parse_model(root["model"]);
        auto law = parse_law(root["law"], base);
        auto att = parse_attitude(root["attitude"]);
        const double K = get_or<double>(root, "strike", "", 1.0);
        try {
            cfg.context.emplace(std::move(model), std::move(law), std::move(att), K, parse_zero_rate(root["law"]));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
    if (root["grids"]) cfg.grids = parse_grids(root["grids"]);
    if (root["mc"]) {
        cfg.mc = parse_mc(root["mc"]);
        cfg.outputs.insert("mc");
    }
    if (const auto o = root["outputs"]) {
        cfg.outputs.clear();
        for (const auto& s : as<std::vector<std::string>>(o, "outputs")) {
            if (!known_outputs().count(s)) throw ConfigError(where(o, "outputs") + ": unknown artifact '" + s + "'");
            cfg.outputs.insert(s);
        }
        if (cfg.outputs.count("mc") && !cfg.mc) throw ConfigError(where(o, "outputs") + ": 'mc' needs an mc section");
    }
    cfg.force = get_or<bool>(root, "force", "", false);
    if (root["out_dir"]) cfg.out_dir = as<std::string>(root["out_dir"], "out_dir");
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::BadFile&) {
        throw ConfigError("config: cannot open " + path.string());
    } catch (const YAML::ParserException& e) {
        throw ConfigError("config:" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    return parse_config(root, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace divstop::harness

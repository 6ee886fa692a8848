#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "divstop/diffusion.hpp"
#include "divstop/equilibrium.hpp"
#include "divstop/errors.hpp"
#include "divstop/mc_oracle.hpp"
#include "divstop/preference.hpp"

namespace divstop::io {

using json = nlohmann::json;

/// %.17g: enough digits for any double to round-trip.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Write to a temporary sibling, then rename over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// JSON text in which every number carries 17 significant digits.
inline std::string dump(const json& j, int indent = 2) {
    std::string out;
    std::function<void(const json&, int)> rec = [&](const json& v, int depth) {
        const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
        const std::string pad_close(static_cast<std::size_t>(indent * depth), ' ');
        if (v.is_object()) {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad + json(it.key()).dump() + ": ";
                rec(it.value(), depth + 1);
            }
            out += "\n" + pad_close + "}";
        } else if (v.is_array()) {
            if (v.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ",\n";
                out += pad;
                rec(v[i], depth + 1);
            }
            out += "\n" + pad_close + "]";
        } else if (v.is_number_float()) {
            const double d = v.get<double>();
            out += std::isfinite(d) ? fmt(d) : json(nullptr).dump();
        } else {
            out += v.dump();
        }
    };
    rec(j, 0);
    out += "\n";
    return out;
}

inline json to_json(const ThresholdResult& t) {
    json j;
    j["a_star"] = t.a_star;
    j["regime"] = to_string(t.regime);
    j["gamma"] = t.gamma ? json(*t.gamma) : json(nullptr);
    if (!std::isnan(t.mean_threshold)) j["mean_threshold"] = t.mean_threshold;
    if (!std::isnan(t.peak_threshold)) j["peak_threshold"] = t.peak_threshold;
    return j;
}

inline json to_json(const IntervalSet& s) {
    json a = json::array();
    for (const auto& i : s) a.push_back({i.lo, i.hi});
    return a;
}

inline json to_json(const EquilibriumReport& r) {
    json j;
    j["a_star"] = r.a_star;
    j["regime"] = to_string(r.regime);
    j["gamma"] = r.gamma ? json(*r.gamma) : json(nullptr);
    j["verdict"] = {{"kind", to_string(r.verdict.kind)},
                    {"a", std::isnan(r.verdict.a) ? json(nullptr) : json(r.verdict.a)},
                    {"common_maximizers", to_json(r.verdict.common)},
                    {"barrier_is_equilibrium", r.verdict_barrier_is_equilibrium}};
    json w = json::array();
    for (const auto& x : r.witnesses)
        w.push_back({{"x", x.x},
                     {"a_best", x.a_best},
                     {"value_best", x.value_best},
                     {"a_other", x.a_other},
                     {"value_other", x.value_other}});
    j["witnesses"] = w;
    j["map_rows"] = r.a_double_star_map.size();
    return j;
}

inline json to_json(const ConditionReport& c) {
    auto viol = [](const std::vector<ConditionViolation>& v) {
        json a = json::array();
        for (const auto& e : v) a.push_back({{"r", e.r}, {"x", e.x}, {"amount", e.amount}});
        return a;
    };
    return {{"m_increasing_in_x", c.cii_a_holds},
            {"minus_m_increasing_in_r", c.cii_b_holds},
            {"violations_x", viol(c.violations_a)},
            {"violations_r", viol(c.violations_b)},
            {"r_grid", c.r_grid},
            {"x_points", c.x_grid.size()}};
}

inline json to_json(const CiiiReport& c) {
    json w = json::array();
    for (const auto& p : c.witnesses) w.push_back({p.first, p.second});
    return {{"holds", c.holds}, {"witnesses", w}};
}

inline json to_json(const McEstimate& e) {
    return {{"mean", e.mean},
            {"std_error", e.std_error},
            {"n_effective", e.n_effective},
            {"censored", e.censored},
            {"truncation_bound", e.truncation_bound},
            {"bias_flag", e.bias_flag}};
}

inline json to_json(const MartingaleCheck& m) {
    json d = json::array();
    for (const auto& e : m.drifts) d.push_back({{"x", e.x}, {"dt", e.dt}, {"drift", e.drift}, {"std_error", e.std_error}});
    return {{"submartingale", m.submartingale}, {"supermartingale", m.supermartingale}, {"drifts", d}};
}

// ---------------------------------------------------------------------------
// CSV

struct CsvColumn {
    std::string name;
    std::string description;
};

/// Sidecar file "<csv>.schema.json" documenting the columns.
inline void write_schema(const std::filesystem::path& csv_path, const std::vector<CsvColumn>& cols,
                         const json& extra = json::object()) {
    json j;
    j["file"] = csv_path.filename().string();
    json c = json::array();
    for (const auto& col : cols) c.push_back({{"name", col.name}, {"description", col.description}});
    j["columns"] = c;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    auto p = csv_path;
    p += ".schema.json";
    write_atomic(p, dump(j));
}

/// One row per maximiser interval: x, a_lo, a_hi.
inline std::string barrier_map_csv(const std::vector<BarrierMapRow>& rows) {
    std::ostringstream os;
    os << "x,a_lo,a_hi\n";
    for (const auto& r : rows)
        for (const auto& i : r.maximizers) os << fmt(r.x) << ',' << fmt(i.lo) << ',' << fmt(i.hi) << '\n';
    return os.str();
}

inline std::vector<BarrierMapRow> read_barrier_map_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,a_lo,a_hi", 0) != 0) throw ConfigError("barrier map csv: missing header");
    std::vector<BarrierMapRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double x, lo, hi;
        if (!(ss >> x >> lo >> hi)) throw ConfigError("barrier map csv: bad row at line " + std::to_string(lineno));
        if (rows.empty() || rows.back().x != x) rows.push_back({x, 0.0, {}});
        rows.back().maximizers.push_back({lo, hi});
    }
    return rows;
}

inline void write_barrier_map(const std::filesystem::path& path, const std::vector<BarrierMapRow>& rows, double a_star,
                              const std::string& example = "") {
    write_atomic(path, barrier_map_csv(rows));
    json extra = {{"a_star", a_star}};
    if (!example.empty()) extra["example"] = example;
    write_schema(path,
                 {{"x", "state"},
                  {"a_lo", "left end of a run of maximising barriers"},
                  {"a_hi", "right end of the run (equal to a_lo for an isolated maximiser)"}},
                 extra);
}

}  // namespace divstop::io

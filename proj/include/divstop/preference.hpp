#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/interpolators/pchip.hpp>

#include "divstop/errors.hpp"
#include "divstop/numerics.hpp"

namespace divstop {

struct RateAtom {
    double r = 0.0;
    double w = 0.0;
};

/// Distribution of the discount rate: point masses plus quadrature nodes
/// standing in for a continuous part. With `f_space` the support values are
/// GBM exponents f(rho) instead of rates.
class DiscountLaw {
public:
    DiscountLaw(std::vector<RateAtom> atoms, std::vector<RateAtom> density_nodes = {}, bool f_space = false,
                double density_sup = 0.0)
        : atoms_(std::move(atoms)), density_(std::move(density_nodes)), f_space_(f_space) {
        std::sort(atoms_.begin(), atoms_.end(), [](const RateAtom& a, const RateAtom& b) { return a.r < b.r; });
        double total = 0.0;
        for (const auto* list : {&atoms_, &density_}) {
            for (const auto& a : *list) {
                if (!std::isfinite(a.r) || a.r < 0.0) throw DomainError("discount law: support values must be finite and >= 0");
                if (!(a.w > 0.0) || !std::isfinite(a.w)) throw ArgumentError("discount law: weights must be positive");
                total += a.w;
            }
        }
        for (std::size_t i = 1; i < atoms_.size(); ++i)
            if (atoms_[i].r == atoms_[i - 1].r) throw ArgumentError("discount law: duplicate atom");
        if (atoms_.empty() && density_.empty()) throw ArgumentError("discount law: empty support");
        if (std::abs(total - 1.0) > 1e-12)
            throw ArgumentError("discount law: weights sum to " + std::to_string(total) + ", expected 1");
        rho_star_ = 0.0;
        for (const auto& a : atoms_) rho_star_ = std::max(rho_star_, a.r);
        for (const auto& a : density_) rho_star_ = std::max(rho_star_, a.r);
        rho_star_ = std::max(rho_star_, density_sup);
        nodes_ = atoms_;
        nodes_.insert(nodes_.end(), density_.begin(), density_.end());
        std::sort(nodes_.begin(), nodes_.end(), [](const RateAtom& a, const RateAtom& b) { return a.r < b.r; });
    }

    static DiscountLaw dirac(double r, bool f_space = false) { return DiscountLaw({{r, 1.0}}, {}, f_space); }

    /// Atoms given with arbitrary positive weights; normalised.
    static DiscountLaw from_weights(std::vector<RateAtom> atoms, bool f_space = false) {
        double total = 0.0;
        for (const auto& a : atoms) total += a.w;
        if (!(total > 0.0)) throw ArgumentError("discount law: weights must be positive");
        for (auto& a : atoms) a.w /= total;
        return DiscountLaw(std::move(atoms), {}, f_space);
    }

    /// Continuous law with (unnormalised) density on [lo, hi], discretised by
    /// an n-node Gauss-Legendre rule.
    static DiscountLaw from_density(const std::function<double(double)>& density, double lo, double hi, int n = 64,
                                    bool f_space = false) {
        if (!(lo >= 0.0) || !(hi > lo)) throw ArgumentError("discount law: density support must be 0 <= lo < hi");
        auto rule = numerics::gauss_legendre(lo, hi, n);
        std::vector<RateAtom> nodes;
        double total = 0.0;
        for (const auto& q : rule) {
            const double d = density(q.x);
            if (!std::isfinite(d) || d < 0.0) throw DomainError("discount law: density must be finite and >= 0");
            if (d == 0.0) continue;
            nodes.push_back({q.x, q.w * d});
            total += q.w * d;
        }
        if (!(total > 0.0)) throw ArgumentError("discount law: density has zero mass");
        for (auto& q : nodes) q.w /= total;
        return DiscountLaw({}, std::move(nodes), f_space, hi);
    }

    /// Two-column CSV (r, weight); an optional header line is skipped.
    /// Weights are normalised on load.
    static DiscountLaw from_csv(std::istream& in, bool f_space = false) {
        std::vector<RateAtom> atoms;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ss(line);
            RateAtom a;
            if (!(ss >> a.r >> a.w)) {
                if (lineno == 1) continue;
                throw ConfigError("discount law csv: line " + std::to_string(lineno) + ": expected two numbers");
            }
            atoms.push_back(a);
        }
        if (atoms.empty()) throw ConfigError("discount law csv: no rows");
        return from_weights(std::move(atoms), f_space);
    }

    static DiscountLaw from_csv_file(const std::string& path, bool f_space = false) {
        std::ifstream in(path);
        if (!in) throw ConfigError("discount law csv: cannot open " + path);
        return from_csv(in, f_space);
    }

    const std::vector<RateAtom>& atoms() const { return atoms_; }
    const std::vector<RateAtom>& density_nodes() const { return density_; }
    /// Atoms and density nodes merged, ascending.
    const std::vector<RateAtom>& nodes() const { return nodes_; }
    bool f_space() const { return f_space_; }
    double rho_star() const { return rho_star_; }
    double min_rate() const { return nodes_.front().r; }

private:
    std::vector<RateAtom> atoms_;
    std::vector<RateAtom> density_;
    std::vector<RateAtom> nodes_;
    bool f_space_ = false;
    double rho_star_ = 0.0;
};

/// Sum of w * fn(r) over the support nodes.
template <class Fn>
double integrate_rho(const DiscountLaw& law, Fn&& fn) {
    double acc = 0.0;
    for (const auto& n : law.nodes()) {
        const double v = fn(n.r);
        if (!std::isfinite(v)) throw NumericError("integrate_rho: non-finite integrand at r = " + std::to_string(n.r));
        acc += n.w * v;
    }
    return acc;
}

namespace attitude {
struct Linear {};
struct Power {
    double p = 0.5;
};
struct Log {};
struct Capped {
    double alpha = 0.25;
};
struct Tabulated {
    std::vector<double> v;
    std::vector<double> phi;
};
}  // namespace attitude

struct AttitudeValue {
    double phi = 0.0;
    double dphi = 0.0;
};

/// The attitude function applied to each discount rate's expected payoff.
class AttitudeFunction {
public:
    using Kind = std::variant<attitude::Linear, attitude::Power, attitude::Log, attitude::Capped, attitude::Tabulated>;

    static AttitudeFunction linear() { return AttitudeFunction(attitude::Linear{}); }
    static AttitudeFunction power(double p) {
        if (!std::isfinite(p) || p > 1.0 || p == 0.0) throw ArgumentError("power attitude: need p <= 1, p != 0");
        return AttitudeFunction(attitude::Power{p});
    }
    static AttitudeFunction log() { return AttitudeFunction(attitude::Log{}); }
    static AttitudeFunction capped(double alpha) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("capped attitude: alpha must lie in (0, 1)");
        return AttitudeFunction(attitude::Capped{alpha});
    }
    static AttitudeFunction tabulated(std::vector<double> v, std::vector<double> phi) {
        if (v.size() != phi.size() || v.size() < 4) throw ArgumentError("tabulated attitude: need >= 4 matching points");
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (!(v[i] > v[i - 1])) throw ArgumentError("tabulated attitude: v must be increasing");
            if (phi[i] < phi[i - 1]) throw ArgumentError("tabulated attitude: values must be non-decreasing");
        }
        AttitudeFunction a(attitude::Tabulated{v, phi});
        a.interp_ = std::make_shared<Pchip>(std::move(v), std::move(phi));
        return a;
    }

    const Kind& kind() const { return kind_; }
    bool is_capped() const { return std::holds_alternative<attitude::Capped>(kind_); }
    double alpha() const {
        if (!is_capped()) throw ArgumentError("attitude: not capped");
        return std::get<attitude::Capped>(kind_).alpha;
    }

    AttitudeValue eval(double v) const {
        if (!std::isfinite(v)) throw DomainError("attitude: non-finite argument");
        if (v < 0.0) throw DomainError("attitude: negative argument");
        return std::visit(
            [&](const auto& k) -> AttitudeValue {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, attitude::Linear>) {
                    return {v, 1.0};
                } else if constexpr (std::is_same_v<T, attitude::Power>) {
                    if (v == 0.0) {
                        if (k.p < 0.0) throw DomainError("power attitude: p < 0 is singular at 0");
                        return {0.0, k.p < 1.0 ? std::numeric_limits<double>::infinity() : 1.0};
                    }
                    return {std::pow(v, k.p) / k.p, std::pow(v, k.p - 1.0)};
                } else if constexpr (std::is_same_v<T, attitude::Log>) {
                    if (v == 0.0) throw DomainError("log attitude: undefined at 0");
                    return {std::log(v), 1.0 / v};
                } else if constexpr (std::is_same_v<T, attitude::Capped>) {
                    return v <= k.alpha ? AttitudeValue{v, 1.0} : AttitudeValue{k.alpha, 0.0};
                } else {
                    if (v < k.v.front() || v > k.v.back())
                        throw DomainError("tabulated attitude: argument outside the table");
                    return {(*interp_)(v), interp_->prime(v)};
                }
            },
            kind_);
    }

    double operator()(double v) const { return eval(v).phi; }

    /// Second derivative, analytic where available, otherwise a central
    /// difference of the interpolant's derivative.
    double second_derivative(double v) const {
        return std::visit(
            [&](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, attitude::Linear>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, attitude::Power>) {
                    return (k.p - 1.0) * std::pow(v, k.p - 2.0);
                } else if constexpr (std::is_same_v<T, attitude::Log>) {
                    return -1.0 / (v * v);
                } else if constexpr (std::is_same_v<T, attitude::Capped>) {
                    return 0.0;
                } else {
                    const double h = 1e-5 * std::max(1.0, std::abs(v));
                    const double lo = std::max(k.v.front(), v - h);
                    const double hi = std::min(k.v.back(), v + h);
                    return (interp_->prime(hi) - interp_->prime(lo)) / (hi - lo);
                }
            },
            kind_);
    }

    std::string describe() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, attitude::Linear>) return "linear";
                else if constexpr (std::is_same_v<T, attitude::Power>) return "power(p=" + std::to_string(k.p) + ")";
                else if constexpr (std::is_same_v<T, attitude::Log>) return "log";
                else if constexpr (std::is_same_v<T, attitude::Capped>) return "capped(alpha=" + std::to_string(k.alpha) + ")";
                else return "tabulated(" + std::to_string(k.v.size()) + " points)";
            },
            kind_);
    }

private:
    using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
    explicit AttitudeFunction(Kind k) : kind_(std::move(k)) {}
    Kind kind_;
    std::shared_ptr<const Pchip> interp_;
};

inline AttitudeValue attitude_eval(const AttitudeFunction& att, double v) { return att.eval(v); }

struct CiiiReport {
    bool holds = true;
    /// Consecutive grid pairs (v_i, v_{i+1}) where phi'(v) v decreases or phi
    /// fails to increase.
    std::vector<std::pair<double, double>> witnesses;
};

/// Scan whether v -> phi'(v) v is non-decreasing and phi strictly increasing
/// on the grid (slack 1e-10).
inline CiiiReport check_ciii(const AttitudeFunction& att, std::span<const double> v_grid) {
    CiiiReport rep;
    if (v_grid.size() < 2) return rep;
    for (std::size_t i = 1; i < v_grid.size(); ++i) {
        if (!(v_grid[i] > v_grid[i - 1]) || !(v_grid[0] > 0.0)) throw ArgumentError("check_ciii: grid must be positive and increasing");
    }
    auto prev = att.eval(v_grid[0]);
    for (std::size_t i = 1; i < v_grid.size(); ++i) {
        const auto cur = att.eval(v_grid[i]);
        const double z0 = prev.dphi * v_grid[i - 1];
        const double z1 = cur.dphi * v_grid[i];
        const bool zeta_ok = z1 - z0 >= -1e-10 * (1.0 + std::abs(z0));
        const bool strict = cur.phi > prev.phi;
        if (!zeta_ok || !strict) rep.witnesses.emplace_back(v_grid[i - 1], v_grid[i]);
        prev = cur;
    }
    rep.holds = rep.witnesses.empty();
    return rep;
}

/// zeta(v) = -phi''(v) / phi(v).
inline double aggregation_coefficient(const AttitudeFunction& att, double v) {
    const double phi = att.eval(v).phi;
    if (phi == 0.0) throw DomainError("aggregation_coefficient: phi(v) = 0");
    return -att.second_derivative(v) / phi;
}

}  // namespace divstop

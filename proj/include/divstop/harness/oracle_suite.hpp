#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "divstop/harness/examples.hpp"
#include "divstop/mc_oracle.hpp"

namespace divstop::harness {

struct OracleLine {
    std::string label;
    double closed = 0.0;
    McEstimate mc;
    double z = 0.0;
    bool pass = false;
};

struct OracleSuite {
    std::vector<OracleLine> hits;
    std::vector<OracleLine> policies;
    std::size_t hit_passes() const {
        std::size_t n = 0;
        for (const auto& l : hits) n += l.pass ? 1 : 0;
        return n;
    }
    /// Statistical criterion: at most one hitting-transform line outside
    /// 3.5 SE, every policy line inside.
    bool pass() const {
        for (const auto& l : policies)
            if (!l.pass) return false;
        return hit_passes() + 1 >= hits.size();
    }
};

inline OracleLine compare(std::string label, double closed, const McEstimate& e, double z_max = 3.5) {
    const double z = e.std_error > 0.0 ? (e.mean - closed) / e.std_error : (e.mean == closed ? 0.0 : INFINITY);
    return {std::move(label), closed, e, z, std::abs(z) <= z_max};
}

inline DiffusionSpec generic_gbm(double mu, double sigma) {
    Generic g;
    g.a = [sigma](double x) { return sigma * x; };
    g.b = [mu](double x) { return mu * x; };
    g.c = [](double) { return 0.0; };
    return DiffusionSpec::generic(std::move(g), 0.0, 10.0);
}

/// Twelve (model, r, x, a) hitting-transform lines and two policy lines
/// (a single barrier and a two-interval policy entered from the gap).
inline OracleSuite run_oracle_suite(McConfig cfg) {
    struct Hit {
        const char* name;
        DiffusionSpec model;
        double r, x, a;
    };
    const auto gbm = DiffusionSpec::gbm(0.05, 0.2);
    const auto gbm_neg = DiffusionSpec::gbm(-0.03, 0.3);
    const auto b3 = DiffusionSpec::bessel(0.5);
    const auto b5 = DiffusionSpec::bessel(1.5);
    const auto b2 = DiffusionSpec::bessel(0.0);
    const auto gen = generic_gbm(0.05, 0.2);
    const std::vector<Hit> hits{
        {"gbm(0.05,0.2)", gbm, 0.02, 1.0, 0.8},      {"gbm(0.05,0.2)", gbm, 0.1, 1.2, 0.7},
        {"gbm(0.05,0.2)", gbm, 0.05, 2.0, 1.0},      {"gbm(-0.03,0.3)", gbm_neg, 0.04, 1.0, 0.6},
        {"bessel(1/2)", b3, 0.5, 1.0, 0.5},          {"bessel(1/2)", b3, 2.0, 1.5, 1.0},
        {"bessel(1/2)", b3, 0.125, 2.0, 0.8},        {"bessel(3/2)", b5, 0.5, 1.0, 0.5},
        {"bessel(3/2)", b5, 1.0, 2.0, 1.2},          {"bessel(0)", b2, 0.5, 1.0, 0.6},
        {"generic gbm(0.05,0.2)", gen, 0.02, 1.0, 0.8}, {"generic gbm(0.05,0.2)", gen, 0.1, 1.5, 1.0},
    };
    OracleSuite out;
    for (const auto& h : hits) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s r=%g x=%g a=%g", h.name, h.r, h.x, h.a);
        out.hits.push_back(compare(buf, hit_transform(h.model, h.r, h.x, h.a).value,
                                   estimate_hit_transform(h.model, h.r, h.x, h.a, cfg)));
    }
    {
        const ValuationContext ctx(gbm, DiscountLaw::from_weights({{0.02, 0.5}, {0.1, 0.5}}),
                                   AttitudeFunction::power(0.5), 1.0);
        const double x = 1.0, a = 0.7;
        const auto e = estimate_J(ctx, x, Policy::barrier(0.0, a), cfg);
        out.policies.push_back(compare("J gbm(0.05,0.2) [0,0.7] x=1", barrier_value(ctx, x, a), e.aggregated));
    }
    {
        const ValuationContext ctx(b3, DiscountLaw::from_weights({{0.5, 0.5}, {2.0, 0.5}}), AttitudeFunction::power(0.5),
                                   1.0, ZeroRateConvention::Reject, [](double s) { return std::abs(1.0 - s); });
        const auto R = Policy::from_intervals({{0.0, 0.4}, {1.6, 2.0}});
        const double x = 1.0;
        const auto e = estimate_J(ctx, x, R, cfg);
        out.policies.push_back(compare("J bessel(1/2) [0,0.4] u [1.6,2] x=1", continuation_value(ctx, x, R), e.aggregated));
    }
    return out;
}

}  // namespace divstop::harness

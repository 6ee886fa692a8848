#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "divstop/errors.hpp"
#include "divstop/valuation.hpp"

namespace divstop::harness {

/// Built-in worked examples. Exponent-valued GBM laws use mu = 0.02,
/// sigma = 0.2, which puts the centre c = mu / sigma^2 - 1/2 at zero so every
/// exponent f >= 0 corresponds to a rate r >= 0.
struct ExampleSpec {
    std::string id;
    std::string summary;
};

inline const std::vector<ExampleSpec>& example_catalog() {
    static const std::vector<ExampleSpec> c{
        {"gbm-thm-small", "GBM, exponents {1,2} equally likely, phi = 2 sqrt(v): smallest threshold is optimal"},
        {"bessel-thm-small", "3-d Bessel, r = 1/2, phi = 2 sqrt(v): explicit smallest threshold"},
        {"gbm-cap-ex1", "GBM, exponents {1,2}, phi = min(v, 0.35): optimal equals smallest, a* = 1 - alpha"},
        {"gbm-cap-ex2", "GBM, exponents {0,2}, phi = min(v, 1/4): optimal 2/3 is not the smallest"},
        {"gbm-cap-ex3", "GBM, exponents {1,2}, phi = min(v, 1/4): no optimal equilibrium"},
        {"bessel-cap-ex1", "3-d Bessel, rates {0,4}, phi = min(v, 0.3): optimal equals smallest"},
        {"bessel-cap-ex2", "3-d Bessel, rates {0,4}, phi = min(v, 1/5): no optimal equilibrium"},
    };
    return c;
}

inline std::vector<std::string> example_ids() {
    std::vector<std::string> ids;
    for (const auto& e : example_catalog()) ids.push_back(e.id);
    return ids;
}

inline void require_example(const std::string& id) {
    const auto ids = example_ids();
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) return;
    std::string all;
    for (const auto& s : ids) all += (all.empty() ? "" : ", ") + s;
    throw ConfigError("unknown example id '" + id + "'; valid ids: " + all);
}

inline DiffusionSpec nominal_gbm() { return DiffusionSpec::gbm(0.02, 0.2, 10.0); }

inline ValuationContext example_context(const std::string& id) {
    require_example(id);
    const auto gbm = nominal_gbm();
    const auto bes = DiffusionSpec::bessel(0.5, 10.0);
    const auto f12 = DiscountLaw::from_weights({{1.0, 0.5}, {2.0, 0.5}}, true);
    const auto r04 = DiscountLaw::from_weights({{0.0, 0.5}, {4.0, 0.5}});
    constexpr auto limit = ZeroRateConvention::TransformLimit;
    if (id == "gbm-thm-small") return {gbm, f12, AttitudeFunction::power(0.5), 1.0};
    if (id == "bessel-thm-small") return {bes, DiscountLaw::dirac(0.5), AttitudeFunction::power(0.5), 1.0};
    if (id == "gbm-cap-ex1") return {gbm, f12, AttitudeFunction::capped(0.35), 1.0};
    if (id == "gbm-cap-ex2")
        return {gbm, DiscountLaw::from_weights({{0.0, 0.5}, {2.0, 0.5}}, true), AttitudeFunction::capped(0.25), 1.0};
    if (id == "gbm-cap-ex3") return {gbm, f12, AttitudeFunction::capped(0.25), 1.0};
    if (id == "bessel-cap-ex1") return {bes, r04, AttitudeFunction::capped(0.3), 1.0, limit};
    return {bes, r04, AttitudeFunction::capped(0.2), 1.0, limit};
}

}  // namespace divstop::harness

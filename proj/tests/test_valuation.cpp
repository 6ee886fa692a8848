#include <gtest/gtest.h>

#include <cmath>

#include "divstop/harness/examples.hpp"
#include "divstop/numerics.hpp"
#include "divstop/valuation.hpp"
#include "oracles.hpp"

using namespace divstop;
using harness::example_context;

TEST(BarrierValue, GbmCappedExample3Regions) {
    const auto ctx = example_context("gbm-cap-ex3");
    EXPECT_NEAR(barrier_value(ctx, 0.8, 0.7), 0.23984375, 1e-15);  // green
    EXPECT_NEAR(barrier_value(ctx, 1.0, 0.7), 0.1785, 1e-15);       // blue
    EXPECT_NEAR(barrier_value(ctx, 0.75, 0.7), 0.25, 1e-15);        // yellow
    EXPECT_NEAR(barrier_value(ctx, 0.6, 0.7), 0.25, 1e-15);         // red
}

TEST(BarrierValue, GbmCappedExample3AgainstPiecewiseTable) {
    const auto ctx = example_context("gbm-cap-ex3");
    for (double a : numerics::linspace(0.5, 0.95, 46))
        for (double x : numerics::linspace(0.3, 2.0, 69))
            ASSERT_NEAR(barrier_value(ctx, x, a), oracle::lambda_gbm_ex3(x, a), 1e-14) << x << " " << a;
}

TEST(BarrierValue, GbmCappedExample2AgainstTable) {
    const auto ctx = example_context("gbm-cap-ex2");
    for (double a : numerics::linspace(0.5, 0.95, 46))
        for (double x : numerics::linspace(a, 2.0, 31))
            ASSERT_NEAR(barrier_value(ctx, x, a), oracle::lambda_gbm_ex2(x, a), 1e-14) << x << " " << a;
}

TEST(BarrierValue, BesselCappedExample2AgainstTable) {
    const auto ctx = example_context("bessel-cap-ex2");
    for (double a : numerics::linspace(0.6, 0.95, 36))
        for (double x : numerics::linspace(a, 2.0, 31))
            ASSERT_NEAR(barrier_value(ctx, x, a), oracle::lambda_bessel_ex2(x, a), 1e-14) << x << " " << a;
}

TEST(BarrierValue, LinearAttitudeIsMixtureOfTransforms) {
    const ValuationContext ctx(DiffusionSpec::gbm(0.05, 0.2), DiscountLaw::from_weights({{0.02, 1.0}, {0.1, 1.0}}),
                               AttitudeFunction::linear(), 1.0);
    const double want =
        0.3 * 0.5 * (oracle::gbm_hit(0.02, 0.05, 0.2, 1.1, 0.7) + oracle::gbm_hit(0.1, 0.05, 0.2, 1.1, 0.7));
    EXPECT_NEAR(barrier_value(ctx, 1.1, 0.7), want, 1e-14);
}

TEST(ContinuationValue, GapUsesBothExits) {
    const double mu = 0.05, sigma = 0.2, r = 0.1;
    const ValuationContext ctx(DiffusionSpec::gbm(mu, sigma), DiscountLaw::dirac(r), AttitudeFunction::linear(), 1.0);
    const auto R = Policy::from_intervals({{0.0, 0.6}, {0.9, 1.5}});
    double lo = 0.0, up = 0.0;
    oracle::bm_exit(mu - 0.5 * sigma * sigma, sigma, r, std::log(0.75), std::log(0.6), std::log(0.9), lo, up);
    EXPECT_NEAR(continuation_value(ctx, 0.75, R), 0.4 * lo + 0.1 * up, 1e-12);
    EXPECT_NEAR(continuation_value(ctx, 2.0, R), 0.0, 1e-15);  // payoff at 1.5 is zero
    EXPECT_EQ(continuation_value(ctx, 0.3, R), 0.7);
}

TEST(ContinuationValue, NeverStoppingIsWorthlessUnderPositiveRates) {
    const auto ctx = example_context("gbm-thm-small");
    EXPECT_EQ(continuation_value(ctx, 0.8, Policy::empty()), 0.0);
}

TEST(ContinuationValue, MoreConcaveAttitudeNeverRaisesStoppingIncentive) {
    // A smaller cap can only lower the aggregated value.
    const auto lo = example_context("gbm-cap-ex3");
    const auto hi = lo.with_attitude(AttitudeFunction::capped(0.35));
    const auto R = Policy::barrier(0.0, 0.65);
    for (double x : numerics::linspace(0.66, 2.0, 50)) EXPECT_LE(continuation_value(lo, x, R), continuation_value(hi, x, R));
}

TEST(Context, ZeroRateConvention) {
    const auto law = DiscountLaw::from_weights({{0.0, 1.0}, {4.0, 1.0}});
    EXPECT_THROW(ValuationContext(DiffusionSpec::bessel(0.5), law, AttitudeFunction::linear(), 1.0), ConventionError);
    EXPECT_NO_THROW(ValuationContext(DiffusionSpec::bessel(0.5), law, AttitudeFunction::linear(), 1.0,
                                     ZeroRateConvention::TransformLimit));
}

TEST(Context, ExponentLawNeedsGbm) {
    const auto law = DiscountLaw::from_weights({{1.0, 1.0}, {2.0, 1.0}}, true);
    EXPECT_THROW(ValuationContext(DiffusionSpec::bessel(0.5), law, AttitudeFunction::linear(), 1.0), ArgumentError);
    EXPECT_THROW(ValuationContext(DiffusionSpec::gbm(0.02, 0.2), DiscountLaw::dirac(0.1), AttitudeFunction::linear(), 0.0),
                 ArgumentError);
}

TEST(Context, CustomPayoff) {
    const ValuationContext ctx(DiffusionSpec::bessel(0.5), DiscountLaw::dirac(0.5), AttitudeFunction::linear(), 1.0,
                               ZeroRateConvention::Reject, [](double s) { return std::abs(1.0 - s); });
    EXPECT_FALSE(ctx.is_put());
    EXPECT_EQ(ctx.payoff(1.5), 0.5);
    EXPECT_NEAR(barrier_value(ctx, 1.0, 0.5), 0.5 * oracle::bessel3_hit(0.5, 1.0, 0.5), 1e-15);
}

TEST(Classify, BarrierAtThresholdForPowerExample) {
    const auto ctx = example_context("gbm-thm-small");
    const auto xs = numerics::linspace(0.05, 1.5, 30);
    const auto c = classify(ctx, Policy::barrier(0.0, 0.6), xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] <= 0.6) {
            EXPECT_NE(c.region[i], Region::Continue) << xs[i];
        } else if (xs[i] < 1.0) {
            EXPECT_EQ(c.region[i], Region::Continue) << xs[i];
        }
    }
}

#include <gtest/gtest.h>

#include <cmath>

#include "divstop/equilibrium.hpp"
#include "divstop/harness/examples.hpp"
#include "divstop/numerics.hpp"
#include "oracles.hpp"

using namespace divstop;
using harness::example_context;

namespace {

const double kGammaGbm = (1.0 + std::sqrt(13.0)) / 8.0;
const double kGammaBessel = 0.713051748159602727;

std::vector<double> a_grid_from(double lo, double hi, double step) { return equilibrium_barrier_grid(lo, hi, step); }

double first_maximizer(const ValuationContext& ctx, double x, const std::vector<double>& as) {
    const std::vector<double> xs{x};
    return optimal_barrier_map(ctx, xs, as).front().maximizers.front().lo;
}

}  // namespace

TEST(Threshold, SmoothExamples) {
    const auto g = smallest_threshold(example_context("gbm-thm-small"));
    EXPECT_NEAR(g.a_star, 0.6, 1e-8);
    EXPECT_EQ(g.regime, ThresholdRegime::Root);
    const auto b = smallest_threshold(example_context("bessel-thm-small"));
    EXPECT_NEAR(b.a_star, (std::sqrt(5.0) - 1.0) / 2.0, 1e-8);
}

TEST(Threshold, SmoothRootSolvesAggregatedCondition) {
    // At a*, -1/(K - a) equals the aggregated log-derivative.
    const auto ctx = example_context("gbm-thm-small");
    const double a = smallest_threshold(ctx).a_star;
    EXPECT_NEAR(aggregated_log_derivative(ctx, a), -1.0 / (1.0 - a), 1e-6);
}

TEST(Threshold, LinearAttitudeAgreesForPowerExamples) {
    for (const char* id : {"gbm-thm-small", "bessel-thm-small"}) {
        const auto ctx = example_context(id);
        EXPECT_NEAR(smallest_threshold(ctx).a_star,
                    smallest_threshold(ctx.with_attitude(AttitudeFunction::linear())).a_star, 1e-10)
            << id;
    }
}

TEST(Threshold, CappedExamples) {
    const auto e1 = smallest_threshold(example_context("gbm-cap-ex1"));
    EXPECT_NEAR(e1.a_star, 0.65, 1e-12);
    EXPECT_EQ(e1.regime, ThresholdRegime::OneMinusAlpha);
    EXPECT_NEAR(e1.mean_threshold, 0.6, 1e-12);
    EXPECT_NEAR(e1.peak_threshold, 2.0 / 3.0, 1e-12);

    for (const char* id : {"gbm-cap-ex2", "gbm-cap-ex3"}) {
        const auto r = smallest_threshold(example_context(id));
        EXPECT_EQ(r.regime, ThresholdRegime::GammaRoot) << id;
        ASSERT_TRUE(r.gamma.has_value());
        EXPECT_NEAR(r.a_star, kGammaGbm, 1e-10) << id;
    }

    const auto b1 = smallest_threshold(example_context("bessel-cap-ex1"));
    EXPECT_NEAR(b1.a_star, 0.7, 1e-12);
    EXPECT_NEAR(b1.peak_threshold, bessel3_hump_argmax(std::sqrt(8.0)), 1e-12);
    const auto b2 = smallest_threshold(example_context("bessel-cap-ex2"));
    EXPECT_NEAR(b2.a_star, kGammaBessel, 1e-12);
}

TEST(Threshold, Bessel3HumpArgmaxMaximisesTheHump) {
    for (double s : {0.5, std::sqrt(2.0), std::sqrt(8.0), 5.0}) {
        const double a = bessel3_hump_argmax(s);
        const double d = oracle::central_diff([&](double y) { return (1.0 - y) * y * std::exp(s * y); }, a, 1e-6);
        EXPECT_NEAR(d, 0.0, 1e-7) << s;
    }
}

TEST(Threshold, SmoothSolverNeedsAttitudeCondition) {
    const auto ctx = example_context("gbm-cap-ex3");
    EXPECT_THROW(smallest_threshold_smooth(ctx), PreconditionError);
    ThresholdOptions opt;
    opt.force = true;
    const auto r = smallest_threshold_smooth(ctx, opt);
    EXPECT_EQ(r.regime, ThresholdRegime::ScanDerived);
    EXPECT_NEAR(r.a_star, kGammaGbm, 2e-3);
}

TEST(Threshold, CappedWithoutClosedSolverNeedsForce) {
    const ValuationContext ctx(DiffusionSpec::bessel(1.5), DiscountLaw::from_weights({{0.5, 1.0}, {2.0, 1.0}}),
                               AttitudeFunction::capped(0.3), 1.0);
    EXPECT_THROW(smallest_threshold(ctx), PreconditionError);
    ThresholdOptions opt;
    opt.force = true;
    const auto r = smallest_threshold(ctx, opt);
    EXPECT_EQ(r.regime, ThresholdRegime::ScanDerived);
    EXPECT_TRUE(is_barrier_equilibrium(ctx, r.a_star, numerics::linspace(0.0, 2.0, 401)).holds);
}

TEST(BarrierEquilibrium, DichotomyAroundSmallestThreshold) {
    const auto xs = numerics::linspace(0.0, 2.0, 2001);
    for (const char* id : {"gbm-thm-small", "bessel-thm-small", "gbm-cap-ex1", "gbm-cap-ex3", "bessel-cap-ex2"}) {
        const auto ctx = example_context(id);
        const double a_star = smallest_threshold(ctx).a_star;
        for (double a : numerics::linspace(0.3, 0.99, 70)) {
            if (std::abs(a - a_star) < 1e-6) continue;
            EXPECT_EQ(is_barrier_equilibrium(ctx, a, xs).holds, a > a_star) << id << " a " << a;
        }
        EXPECT_TRUE(is_barrier_equilibrium(ctx, a_star, xs).holds) << id;
    }
}

TEST(PolicyIteration, GrowsToABarrierEquilibrium) {
    // Theta only adds states, so from below it can overshoot a*; the limit is
    // some barrier at or above a*.
    const auto ctx = example_context("gbm-thm-small");
    const auto xs = numerics::linspace(0.0, 2.0, 401);
    const auto tr = iterate_to_fixed_point(ctx, Policy::barrier(0.0, 0.3), xs);
    ASSERT_TRUE(tr.converged);
    for (std::size_t i = 1; i < tr.sequence.size(); ++i) EXPECT_TRUE(tr.sequence[i - 1].is_subset_of(tr.sequence[i]));
    const auto& lim = tr.limit();
    ASSERT_EQ(lim.intervals().size(), 1u);
    const double b = lim.intervals().front().hi;
    EXPECT_GE(b, 0.6 - 5e-3);
    EXPECT_LT(b, 1.0);
    EXPECT_TRUE(is_barrier_equilibrium(ctx, b, xs).holds);
    EXPECT_TRUE(improve_policy(ctx, lim, xs) == lim);
}

TEST(PolicyIteration, ImprovementContainsInput) {
    const auto ctx = example_context("bessel-cap-ex2");
    const auto xs = numerics::linspace(0.0, 2.0, 201);
    const auto R = Policy::from_intervals({{0.0, 0.4}, {0.8, 0.9}});
    EXPECT_TRUE(align_to_grid(R, xs).is_subset_of(improve_policy(ctx, R, xs)));
}

TEST(Intervals, Intersection) {
    const IntervalSet a{{0.0, 1.0}, {2.0, 3.0}};
    const IntervalSet b{{0.5, 2.5}};
    const IntervalSet want{{0.5, 1.0}, {2.0, 2.5}};
    EXPECT_EQ(intersect(a, b), want);
    EXPECT_TRUE(intersect(a, IntervalSet{{1.2, 1.8}}).empty());
    EXPECT_TRUE(set_contains(a, 2.0));
    EXPECT_FALSE(set_contains(a, 1.5));
}

TEST(Verdict, SyntheticMaps) {
    std::vector<BarrierMapRow> rows{{0.0, 0.0, {{0.6, 0.7}}}, {1.0, 0.0, {{0.65, 0.8}}}};
    auto v = verdict_from_map(rows, 0.65);
    EXPECT_EQ(v.kind, VerdictKind::Exists);
    v = verdict_from_map(rows, 0.6);
    EXPECT_EQ(v.kind, VerdictKind::ExistsNotSmallest);
    EXPECT_EQ(v.a, 0.65);
    rows.push_back({2.0, 0.0, {{0.5, 0.55}}});
    v = verdict_from_map(rows, 0.6);
    EXPECT_EQ(v.kind, VerdictKind::DoesNotExist);
    ASSERT_EQ(v.witness_rows.size(), 2u);
    EXPECT_TRUE(intersect(rows[v.witness_rows[0]].maximizers, rows[v.witness_rows[1]].maximizers).empty());
}

TEST(Verdict, GreedyWitnessWhenNoDisjointPair) {
    // Every pair overlaps, the triple does not.
    const std::vector<BarrierMapRow> rows{{0.0, 0.0, {{0.0, 2.0}}}, {1.0, 0.0, {{1.0, 3.0}}}, {2.0, 0.0, {{0.0, 0.5}, {2.5, 3.0}}}};
    const auto v = verdict_from_map(rows, 0.0);
    EXPECT_EQ(v.kind, VerdictKind::DoesNotExist);
    EXPECT_EQ(v.witness_rows.size(), 3u);
}

TEST(Verdict, Examples) {
    struct Case {
        const char* id;
        VerdictKind kind;
        double a;
    };
    for (const auto& c : {Case{"gbm-thm-small", VerdictKind::Exists, 0.6},
                          Case{"gbm-cap-ex1", VerdictKind::Exists, 0.65},
                          Case{"gbm-cap-ex2", VerdictKind::ExistsNotSmallest, 2.0 / 3.0},
                          Case{"gbm-cap-ex3", VerdictKind::DoesNotExist, 0.0},
                          Case{"bessel-cap-ex1", VerdictKind::Exists, 0.7},
                          Case{"bessel-cap-ex2", VerdictKind::DoesNotExist, 0.0}}) {
        const auto rep = analyze(example_context(c.id));
        EXPECT_EQ(rep.verdict.kind, c.kind) << c.id;
        if (c.kind != VerdictKind::DoesNotExist) {
            EXPECT_NEAR(rep.verdict.a, c.a, 1e-3) << c.id;
            EXPECT_TRUE(rep.verdict_barrier_is_equilibrium) << c.id;
        } else {
            ASSERT_GE(rep.witnesses.size(), 2u) << c.id;
            for (const auto& w : rep.witnesses) EXPECT_GT(w.value_best, w.value_other) << c.id;
        }
    }
}

TEST(Verdict, StableUnderGridRefinement) {
    for (const char* id : {"gbm-cap-ex1", "gbm-cap-ex2", "gbm-cap-ex3"}) {
        const auto ctx = example_context(id);
        AnalysisOptions coarse;
        AnalysisOptions fine;
        fine.a_step = 5e-4;
        fine.x_grid = numerics::linspace(0.0, 2.0, 801);
        EXPECT_EQ(analyze(ctx, coarse).verdict.kind, analyze(ctx, fine).verdict.kind) << id;
    }
}

TEST(OptimalBarrier, GbmExample3AgainstDenseScan) {
    const auto ctx = example_context("gbm-cap-ex3");
    const double step = 1e-4;
    const auto as = a_grid_from(kGammaGbm, 1.0, step);
    for (double x : {0.85, 0.95, 1.0, 1.2}) {
        const auto runs = oracle::argmax_runs([&](double a) { return oracle::lambda_gbm_ex3(x, a); }, kGammaGbm, 1.0, step, 1e-9);
        EXPECT_NEAR(first_maximizer(ctx, x, as), runs.front().lo, 2.0 * step) << x;
    }
    const std::vector<double> xs{0.72};
    const auto row = optimal_barrier_map(ctx, xs, as).front();
    ASSERT_EQ(row.maximizers.size(), 1u);
    EXPECT_NEAR(row.maximizers.front().lo, kGammaGbm, 1e-12);
    EXPECT_NEAR(row.maximizers.front().hi, 1.0, 1e-12);
}

TEST(OptimalBarrier, GbmExample3ClosedFormBranches) {
    const auto ctx = example_context("gbm-cap-ex3");
    const auto as = a_grid_from(kGammaGbm, 1.0, 1e-4);
    EXPECT_NEAR(first_maximizer(ctx, 0.85, as), 2.0 / 3.0, 2e-4);
    EXPECT_NEAR(first_maximizer(ctx, 0.95, as), 0.5 * (1.0 + std::sqrt(0.05)), 2e-4);
    EXPECT_NEAR(first_maximizer(ctx, 1.0, as), 1.0 / std::sqrt(3.0), 2e-4);
}

TEST(OptimalBarrier, BesselExample2AgainstDenseScan) {
    const auto ctx = example_context("bessel-cap-ex2");
    const double step = 1e-4;
    const auto as = a_grid_from(kGammaBessel, 1.0, step);
    for (double x : {0.81, 0.95, 1.0, 1.5}) {
        const auto runs =
            oracle::argmax_runs([&](double a) { return oracle::lambda_bessel_ex2(x, a); }, kGammaBessel, 1.0, step, 1e-9);
        EXPECT_NEAR(first_maximizer(ctx, x, as), runs.front().lo, 2.0 * step) << x;
    }
}

TEST(OptimalBarrier, BesselExample2SwitchesToGammaAtUnroundedProduct) {
    // The interior branch of a**(x) decreases continuously onto gamma at
    // x = 5 gamma (1 - gamma), where the r = 0 atom alone reaches the cap.
    const auto ctx = example_context("bessel-cap-ex2");
    const auto as = a_grid_from(kGammaBessel, 1.0, 1e-5);
    const double xt = 5.0 * kGammaBessel * (1.0 - kGammaBessel);
    EXPECT_GT(first_maximizer(ctx, xt - 2e-4, as), kGammaBessel + 5e-5);
    EXPECT_GT(first_maximizer(ctx, xt - 4e-4, as), first_maximizer(ctx, xt - 2e-4, as));
    EXPECT_NEAR(first_maximizer(ctx, xt + 2e-4, as), kGammaBessel, 1e-12);
}

TEST(OptimalBarrier, SmallestThresholdDominatesForSmoothAttitude) {
    const auto ctx = example_context("gbm-thm-small");
    const double a_star = smallest_threshold(ctx).a_star;
    for (double x : numerics::linspace(0.0, 2.0, 200))
        for (double a : numerics::linspace(a_star, 1.0, 200))
            ASSERT_GE(barrier_value(ctx, x, a_star), barrier_value(ctx, x, a) - 1e-12) << x << " " << a;
}

#include <gtest/gtest.h>

#include <cmath>

#include "divstop/numerics.hpp"

using namespace divstop;

TEST(Linspace, EndpointsAndSpacing) {
    const auto v = numerics::linspace(0.0, 2.0, 401);
    ASSERT_EQ(v.size(), 401u);
    EXPECT_EQ(v.front(), 0.0);
    EXPECT_EQ(v.back(), 2.0);
    EXPECT_NEAR(v[170], 0.85, 1e-15);
    EXPECT_TRUE(numerics::is_sorted_strict(v));
}

TEST(Linspace, DegenerateCounts) {
    EXPECT_TRUE(numerics::linspace(0.0, 1.0, 0).empty());
    EXPECT_EQ(numerics::linspace(0.3, 1.0, 1), std::vector<double>{0.3});
}

TEST(ArangeInclusive, HitsUpperEnd) {
    const auto v = numerics::arange_inclusive(0.5, 1.0, 0.1);
    ASSERT_EQ(v.size(), 6u);
    EXPECT_DOUBLE_EQ(v.back(), 1.0);
}

TEST(BisectRoot, SquareRootOfTwo) {
    const double r = numerics::bisect_root([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-14);
    EXPECT_NEAR(r, std::sqrt(2.0), 1e-13);
}

TEST(BisectRoot, RequiresBracket) {
    EXPECT_THROW(numerics::bisect_root([](double x) { return x * x + 1.0; }, 0.0, 2.0), NumericError);
}

TEST(Argmax, Parabola) {
    EXPECT_NEAR(numerics::argmax([](double x) { return -(x - 0.3) * (x - 0.3); }, 0.0, 1.0), 0.3, 1e-7);
}

TEST(GaussLegendre, ExactForPolynomialsUpToDegree2nMinus1) {
    for (int n : {2, 5, 16, 64}) {
        const auto rule = numerics::gauss_legendre(0.0, 2.0, n);
        ASSERT_EQ(rule.size(), static_cast<std::size_t>(n));
        const int deg = 2 * n - 1;
        double s = 0.0;
        for (const auto& q : rule) s += q.w * std::pow(q.x, deg);
        EXPECT_NEAR(s, std::pow(2.0, deg + 1) / (deg + 1), 1e-12 * std::pow(2.0, deg + 1)) << n;
        for (std::size_t i = 1; i < rule.size(); ++i) EXPECT_LT(rule[i - 1].x, rule[i].x);
    }
}

TEST(GaussLegendre, WeightsSumToLength) {
    double s = 0.0;
    for (const auto& q : numerics::gauss_legendre(1.0, 4.0, 64)) s += q.w;
    EXPECT_NEAR(s, 3.0, 1e-13);
}

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "tpfilm/regularization.hpp"

using namespace tpfilm;

TEST(Mobility, FloorAndShift) {
    EXPECT_DOUBLE_EQ(a_eps(0.1, -3.0), 0.1);
    EXPECT_DOUBLE_EQ(a_eps(0.1, 0.0), 0.1);
    EXPECT_DOUBLE_EQ(a_eps(0.1, 2.0), 2.1);
    EXPECT_THROW(a_eps(0.0, 1.0), ParameterDomainError);
    EXPECT_THROW(a_eps(1.5, 1.0), ParameterDomainError);
    EXPECT_NO_THROW(a_eps(1.0, 1.0));
    EXPECT_THROW(RegularizationParams(-1.0), ParameterDomainError);
    EXPECT_DOUBLE_EQ(RegularizationParams(0.5).eps(), 0.5);
}

TEST(Tent, PiecewiseLinearAndOdd) {
    EXPECT_DOUBLE_EQ(tent(0.5), 0.5);
    EXPECT_DOUBLE_EQ(tent(1.0), 1.0);
    EXPECT_DOUBLE_EQ(tent(1.5), 0.5);
    EXPECT_DOUBLE_EQ(tent(2.0), 0.0);
    EXPECT_DOUBLE_EQ(tent(7.0), 0.0);
    for (double s : {0.25, 1.2, 1.9, 3.0}) EXPECT_DOUBLE_EQ(tent(-s), -tent(s));
}

TEST(Tent, ScaledVersionMatchesDefinition) {
    for (double eps : {1.0, 0.3, 1e-2}) {
        for (double y : {-250.0, -150.0, -20.0, -0.5, 0.0, 0.5, 20.0, 150.0, 250.0}) {
            EXPECT_NEAR(tent_eps(eps, y), tent(eps * y) / eps, 1e-12 * std::max(1.0, std::abs(y)));
        }
    }
}

TEST(Tent, IdentityBranchIsBitExact) {
    for (double y : {1e-300, 0.1, 3.3, 99.999}) EXPECT_EQ(tent_eps(1e-2, y), y);
}

TEST(Truncation, IdentityBelowThresholdAndZeroFarOut) {
    const auto c = quadratic_closure(1.0);
    const double eps = 0.05;
    const auto th = s_threshold(eps, c);
    ASSERT_TRUE(th.exact.has_value());
    EXPECT_DOUBLE_EQ(*th.exact, 1.0 / eps);
    EXPECT_LE(th.generic, *th.exact);
    for (double s : {0.0, 1.0, 5.0, 19.99}) EXPECT_EQ(tau_eps(eps, s, c), s);
    EXPECT_EQ(tau_eps(eps, 41.0, c), 0.0);
    EXPECT_NEAR(tau_eps(eps, 30.0, c), 30.0 * (40.0 - 30.0) / 30.0, 1e-12);
    EXPECT_EQ(tau_eps(eps, 0.0, c), 0.0);
}

TEST(Truncation, GenericThresholdFormula) {
    const auto c = quadratic_closure(2.0, 0.5);
    const double eps = 1e-3;
    const auto th = s_threshold(eps, c);
    const double expected = std::pow(std::pow(1.0 / (eps * 2.0), 0.5 / 1.5) - 1.0, 1.0 / 0.5);
    EXPECT_NEAR(th.generic, expected, 1e-12 * expected);
    EXPECT_FALSE(th.degenerate);
    EXPECT_TRUE(s_threshold(1.0, quadratic_closure(2.0)).degenerate);
}

TEST(SigmaEps, DerivativeMatchesTruncatedSigmaPrime) {
    const auto c = arctan_closure(1.0, 1.0);
    const double eps = 0.2;
    const double h = 1e-4;
    for (double s : {-3.0, 0.5, 2.0, 4.0, 9.0}) {
        const double fd = (sigma_eps(eps, s + h, c) - sigma_eps(eps, s - h, c)) / (2 * h);
        EXPECT_NEAR(fd, sigma_eps_prime(eps, s, c), 1e-7);
    }
    EXPECT_EQ(sigma_eps(eps, 1.0, c), 0.0);
}

TEST(SigmaEps, EqualsSigmaInsideIdentityRange) {
    const auto c = quadratic_closure(1.0);
    for (double s : {0.0, 0.5, 2.0}) EXPECT_NEAR(sigma_eps(0.1, s, c), c.sigma(s), 1e-13);
}

TEST(PropertyCheck, QuadraticAndArctanPass) {
    for (const auto& c : {quadratic_closure(1.0), arctan_closure(0.5, 2.0)}) {
        const auto rep = regularization_property_check(c, 20000, 7);
        EXPECT_TRUE(rep.all_pass()) << c.name;
        for (const auto& p : rep.properties) EXPECT_GT(p.tested, 0) << p.name;
    }
}

TEST(PropertyCheck, DetectsAViolation) {
    auto c = quadratic_closure(1.0);
    c.abs_sigma_prime_inverse = [](double y) { return 2.0 * y; };  // overstated threshold
    const auto rep = regularization_property_check(c, 20000, 7);
    bool identity_failed = false;
    for (const auto& p : rep.properties) {
        if (p.name == "tau.identity") identity_failed = !p.pass;
    }
    EXPECT_TRUE(identity_failed);
    EXPECT_THROW(regularization_property_check(c, 0), UsageError);
}

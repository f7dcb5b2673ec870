#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "volterra/quadrature.hpp"

using namespace volterra;

namespace {

// Closed form of int_0^1 sin(20 s) ds.
const double kSin20Integral = (1.0 - std::cos(20.0)) / 20.0;

QuadratureConfig with_panels(int per_unit) {
    QuadratureConfig cfg;
    cfg.min_panels_per_unit = per_unit;
    return cfg;
}

}  // namespace

TEST(GaussLegendre, SmallRules) {
    const auto& one = gauss_legendre_rule(1);
    EXPECT_EQ(one.nodes, std::vector<double>{0.0});
    EXPECT_EQ(one.weights, std::vector<double>{2.0});

    const auto& two = gauss_legendre_rule(2);
    EXPECT_NEAR(two.nodes[0], -1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(two.nodes[1], 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(two.weights[0], 1.0, 1e-15);
    EXPECT_NEAR(two.weights[1], 1.0, 1e-15);
}

TEST(GaussLegendre, WeightsPositiveNodesIncreasingSumTwo) {
    for (int n = 1; n <= 64; ++n) {
        const auto& r = gauss_legendre_rule(n);
        ASSERT_EQ(r.nodes.size(), static_cast<std::size_t>(n));
        EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 2.0, 1e-14) << "n=" << n;
        for (int k = 0; k < n; ++k) {
            EXPECT_GT(r.weights[k], 0.0);
            if (k) {
                EXPECT_LT(r.nodes[k - 1], r.nodes[k]);
            }
        }
    }
}

TEST(GaussLegendre, OrderOutOfRange) {
    EXPECT_THROW(gauss_legendre_rule(0), ConfigError);
    EXPECT_THROW(gauss_legendre_rule(65), ConfigError);
}

// A single n-point panel integrates any polynomial of degree <= 2n-1 exactly.
TEST(GaussLegendre, PolynomialExactness) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int n = 1; n <= 20; ++n) {
        const auto& rule = gauss_legendre_rule(n);
        for (int trial = 0; trial < 5; ++trial) {
            const int degree = 2 * n - 1;
            std::vector<double> c(degree + 1);
            for (double& v : c) v = coef(rng);
            double exact = 0.0;  // int_{-1}^{1} u^k = 2/(k+1) for even k
            for (int k = 0; k <= degree; k += 2) exact += c[k] * 2.0 / (k + 1);
            double approx = 0.0;
            for (int q = 0; q < n; ++q) {
                double p = 0.0;
                for (int k = degree; k >= 0; --k) p = p * rule.nodes[q] + c[k];
                approx += rule.weights[q] * p;
            }
            EXPECT_NEAR(approx, exact, 1e-12 * std::max(1.0, std::abs(exact))) << "n=" << n;
        }
    }
}

TEST(Integrate1d, Examples) {
    const QuadratureConfig cfg;
    const auto one = integrate_1d([](double) { return 1.0; }, 0.0, 1.0, cfg);
    EXPECT_NEAR(one.value, 1.0, 1e-14);
    EXPECT_TRUE(one.converged);

    const auto osc = integrate_1d([](double s) { return std::sin(20.0 * s); }, 0.0, 1.0,
                                  with_oscillation_hint(cfg, 20.0));
    EXPECT_NEAR(osc.value, kSin20Integral, 1e-12);
    EXPECT_LE(osc.error_estimate, cfg.abs_tol);

    const auto empty = integrate_1d([](double) { return 5.0; }, 0.4, 0.4, cfg);
    EXPECT_EQ(empty.value, 0.0);
    EXPECT_EQ(empty.error_estimate, 0.0);
}

TEST(Integrate1d, Errors) {
    const QuadratureConfig cfg;
    EXPECT_THROW(integrate_1d([](double) { return 1.0; }, 1.0, 0.0, cfg), DomainError);
    EXPECT_THROW(integrate_1d([](double s) { return s > 0.5 ? std::numeric_limits<double>::infinity() : 0.0; }, 0.0,
                              1.0, cfg),
                 IntegrandError);
}

TEST(Integrate1d, FlagsNonConvergence) {
    QuadratureConfig cfg;
    cfg.points_per_panel = 2;
    cfg.max_refinements = 1;
    cfg.abs_tol = 1e-15;
    const auto r = integrate_1d([](double s) { return std::sin(40.0 * s); }, 0.0, 1.0, cfg);
    EXPECT_FALSE(r.converged);
    EXPECT_GT(r.error_estimate, cfg.abs_tol);
}

TEST(PanelsForFrequency, HalfPeriodPanels) {
    EXPECT_EQ(panels_for_frequency(0.0), 1);
    EXPECT_EQ(panels_for_frequency(10.0), 4);
    EXPECT_EQ(panels_for_frequency(20.0), 7);
    EXPECT_THROW(panels_for_frequency(-1.0), ConfigError);
}

TEST(Integrate2d, Examples) {
    const QuadratureConfig cfg;
    EXPECT_NEAR(integrate_2d_tensor([](double, double) { return 1.0; }, 1.0, cfg).value, 1.0, 1e-13);

    const auto sep = integrate_2d_tensor([](double a, double b) { return std::sin(20.0 * a) * std::sin(20.0 * b); },
                                         1.0, with_oscillation_hint(cfg, 20.0));
    EXPECT_NEAR(sep.value, kSin20Integral * kSin20Integral, 1e-13);

    const auto zero = integrate_2d_tensor([](double, double) { return 1.0; }, 0.0, cfg);
    EXPECT_EQ(zero.value, 0.0);
    EXPECT_EQ(zero.error_estimate, 0.0);
    EXPECT_THROW(integrate_2d_tensor([](double, double) { return 1.0; }, -1.0, cfg), DomainError);
}

TEST(Integrate2d, SeparableEqualsProductOfOneDimensional) {
    const auto cfg = with_panels(4);
    const auto g = [](double s) { return std::exp(-s) * std::cos(3.0 * s); };
    const auto h = [](double s) { return 1.0 + s * s; };
    for (double t : {0.3, 0.77, 1.0}) {
        const double prod = integrate_1d(g, 0.0, t, cfg).value * integrate_1d(h, 0.0, t, cfg).value;
        const double two_d = integrate_2d_tensor([&](double a, double b) { return g(a) * h(b); }, t, cfg).value;
        EXPECT_NEAR(two_d, prod, 10 * cfg.abs_tol);
    }
}

TEST(IntegratePiecewise, ExactOnKinkedIntegrand) {
    // |s - 0.3| has a kink; splitting there makes every piece polynomial.
    const std::vector<double> kinks{0.3, 2.0, -1.0};
    QuadratureConfig cfg;
    cfg.points_per_panel = 2;
    const auto r = integrate_piecewise([](double s) { return std::abs(s - 0.3); }, 0.0, 1.0, kinks, cfg);
    EXPECT_NEAR(r.value, 0.5 * 0.09 + 0.5 * 0.49, 1e-15);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(integrate_piecewise([](double) { return 1.0; }, 0.5, 0.5, kinks, cfg).value, 0.0);
}

TEST(QuadratureConfig, Validation) {
    QuadratureConfig cfg;
    EXPECT_NO_THROW(validate(cfg));
    cfg.refine_factor = 1;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = {};
    cfg.abs_tol = 0.0;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = {};
    cfg.points_per_panel = 70;
    EXPECT_THROW(validate(cfg), ConfigError);
}

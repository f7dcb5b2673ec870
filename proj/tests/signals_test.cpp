#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "volterra/signals.hpp"

using namespace volterra;

namespace {

// Reference values evaluated independently in 30-digit arithmetic.
constexpr double kModel1PrintedAt01 = 0.0667883485080479175;
constexpr double kModel1CorrectedAt01 = 0.0677180668584717313;
constexpr double kModel1CorrectedAt05 = 0.0519874137874671139;
// Model 2 output at t = 0.5 and t = 1, via the split K2 = sin(s1)cos(2 s2) + cos(s1)sin(2 s2).
constexpr double kModel2OutputAt05 = 0.0987515510659171066;
constexpr double kModel2OutputAt1 = 0.0898854517149688677;

QuadratureConfig model1_cfg() { return with_oscillation_hint({}, kModel1Frequency); }
QuadratureConfig model2_cfg() { return with_oscillation_hint({}, kModel2Frequency); }

}  // namespace

TEST(Model1, Input) {
    EXPECT_EQ(model1_input(0.0), 0.0);
    EXPECT_NEAR(model1_input(std::numbers::pi / 40.0), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(model1_input(0.1), std::sin(2.0));
}

TEST(Model1, PrintedOutput) {
    EXPECT_NEAR(model1_output_printed(0.0), 100.0 / 40501.0, 1e-16);
    EXPECT_NEAR(model1_output_printed(0.1), kModel1PrintedAt01, 1e-15);
    EXPECT_NEAR(model1_output_printed(1e-9), model1_output_printed(0.0), 1e-9);
}

TEST(Model1, CorrectedOutput) {
    EXPECT_NEAR(model1_output_corrected(0.0), 0.0, 1e-16);
    EXPECT_NEAR(model1_output_corrected(0.1), kModel1CorrectedAt01, 1e-15);
    EXPECT_NEAR(model1_output_corrected(0.5), kModel1CorrectedAt05, 1e-15);
}

TEST(Model1, CorrectedIsForwardResponseOfKnownKernels) {
    const auto k = model1_kernels();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const double t = u(rng);
        EXPECT_NEAR(model1_output_corrected(t), forward_response(k, model1_input, t, model1_cfg()), 1e-9) << t;
    }
    EXPECT_NEAR(forward_response(k, model1_input, 0.5, model1_cfg()), kModel1CorrectedAt05, 1e-10);
}

TEST(Model1, PrintedMinusCorrectedPeaksAtZero) {
    double worst = 0.0;
    double where = -1.0;
    for (int k = 0; k <= 10000; ++k) {
        const double t = k / 10000.0;
        const double d = std::abs(model1_output_printed(t) - model1_output_corrected(t));
        if (d > worst) {
            worst = d;
            where = t;
        }
    }
    EXPECT_NEAR(worst, 100.0 / 40501.0, 1e-12);
    EXPECT_EQ(where, 0.0);
}

TEST(Model2, Input) {
    EXPECT_EQ(model2_input(0.0), 0.0);
    EXPECT_NEAR(model2_input(0.1), std::exp(-0.3) * std::sin(1.0), 1e-16);
    EXPECT_NEAR(model2_input(0.1), 0.623377037720678736, 1e-15);
    for (int k = 1; k <= 3; ++k) {
        const double z = k * std::numbers::pi / 10.0;
        EXPECT_LT(model2_input(z - 1e-3) * model2_input(z + 1e-3), 0.0);
    }
}

TEST(ForwardResponse, TrivialKernels) {
    const QuadratureConfig cfg;
    const GroundTruthKernels zero{[](double) { return 0.0; }, [](double, double) { return 0.0; }};
    for (double t : {0.0, 0.3, 1.0}) EXPECT_EQ(forward_response(zero, model2_input, t, cfg), 0.0);

    const GroundTruthKernels unit{[](double) { return 1.0; }, [](double, double) { return 0.0; }};
    for (double t : {0.0, 0.25, 0.9}) {
        EXPECT_NEAR(forward_response(unit, [](double) { return 1.0; }, t, cfg), t, 1e-15);
    }
}

TEST(ForwardResponse, Model2ReferenceValues) {
    const auto k = model2_kernels();
    EXPECT_NEAR(forward_response(k, model2_input, 0.5, model2_cfg()), kModel2OutputAt05, 1e-13);
    EXPECT_NEAR(forward_response(k, model2_input, 1.0, model2_cfg()), kModel2OutputAt1, 1e-13);

    // Tightened run (smaller abs_tol, doubled panels) agrees with the default one.
    QuadratureConfig tight = model2_cfg();
    tight.abs_tol = 1e-15;
    tight.min_panels_per_unit *= 2;
    EXPECT_NEAR(forward_response(k, model2_input, 1.0, tight), forward_response(k, model2_input, 1.0, model2_cfg()),
                1e-14);
}

TEST(Model2Pair, OutputMatchesForwardResponseAndStartsAtZero) {
    const auto pair = make_model2_pair();
    EXPECT_EQ(pair.y(0.0), 0.0);
    const auto k = model2_kernels();
    for (double t : {0.1, 0.37, 0.5, 1.0}) {
        EXPECT_EQ(pair.y(t), forward_response(k, model2_input, t, model2_cfg()));
        EXPECT_EQ(pair.y(t), pair.y(t));  // cached value is stable
    }
    EXPECT_EQ(pair.x.oscillation_hint, 10.0);
}

TEST(Perturb, DeltaZeroIsIdentity) {
    const std::vector<double> v{1.0, -2.0, 3.5};
    EXPECT_EQ(perturb(v, {0.0, 3, 99}, 1), v);
}

TEST(Perturb, BoundedAndDeterministic) {
    std::vector<double> v(5000, 0.25);
    const NoiseSpec spec{1e-3, 4, 42};
    const auto a = perturb(v, spec, 2);
    const auto b = perturb(v, spec, 2);
    EXPECT_EQ(a, b);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LE(std::abs(a[i] - v[i]), spec.delta);
    EXPECT_NE(a, perturb(v, spec, 3));
    EXPECT_NE(a, perturb(v, spec, 2, kOutputNoiseStream));
    EXPECT_NE(a, perturb(v, NoiseSpec{1e-3, 4, 43}, 2));
}

TEST(Perturb, TrialOutOfRange) {
    EXPECT_THROW(perturb({1.0}, {0.1, 2, 0}, 2), ConfigError);
    EXPECT_THROW(perturb({1.0}, {0.1, 2, 0}, -1), ConfigError);
}

TEST(Perturb, MeanZeroWithinThreeSigma) {
    const double delta = 0.5;
    const std::size_t n = 10000;
    const auto noise = perturb(std::vector<double>(n, 0.0), {delta, 1, 7}, 0);
    double mean = 0.0;
    for (double v : noise) mean += v;
    mean /= static_cast<double>(n);
    EXPECT_LE(std::abs(mean), 3.0 * delta / std::sqrt(3.0 * n));
}

TEST(SampledSignal, InterpolatesLinearly) {
    const SampledSignal s({0.0, 0.5, 1.0}, {0.0, 1.0, -1.0});
    EXPECT_EQ(s(0.0), 0.0);
    EXPECT_DOUBLE_EQ(s(0.25), 0.5);
    EXPECT_DOUBLE_EQ(s(0.75), 0.0);
    EXPECT_EQ(s(1.0), -1.0);
    EXPECT_THROW(s(1.1), DomainError);
    EXPECT_THROW(SampledSignal({0.0, 0.0}, {1.0, 2.0}), ConfigError);
    EXPECT_THROW(SampledSignal({0.0, 1.0}, {1.0}), ConfigError);
}

TEST(NoisyPair, SamplesStayWithinDeltaOfClean) {
    const auto clean = make_model1_pair();
    const std::vector<double> nodes{0.0, 0.25, 0.5, 1.0};
    const NoiseSpec spec{1e-3, 2, 5};
    const auto noisy = noisy_pair(clean, nodes, spec, 1);
    EXPECT_EQ(noisy.x.breakpoints.size(), kMeasuredInputSamples);
    for (double t : nodes) EXPECT_LE(std::abs(noisy.y(t) - clean.y(t)), spec.delta);
    for (double g : noisy.x.breakpoints) EXPECT_LE(std::abs(noisy.x(g) - clean.x(g)), spec.delta + 1e-15);
}

TEST(SampledPair, RequiresMatchingGrids) {
    const SampledSignal x({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0});
    const SampledSignal y({0.0, 0.4, 1.0}, {0.0, 1.0, 0.0});
    EXPECT_THROW(make_sampled_pair(x, y), ConfigError);
    const auto p = make_sampled_pair(x, x);
    EXPECT_EQ(p.horizon, 1.0);
}

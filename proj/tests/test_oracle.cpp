#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "hilreg/errors.hpp"
#include "hilreg/estimator.hpp"
#include "hilreg/oracle.hpp"

using namespace hilreg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("oracle small-ball probability matches the chi-square law", "[oracle]") {
    const ModelOracle oracle(LinearProcessModel::iid(3), RegressionModel{}, HilbertVector::zeros(3),
                             Transform::identity(), 400000, 3);
    CHECK(oracle.draws() == 400000);
    for (double h : {0.3, 0.6, 1.0, 1.5, 2.5}) {
        const double exact = boost::math::gamma_p(1.5, h * h / 2.0);
        const double se = std::sqrt(exact * (1.0 - exact) / 400000.0);
        CHECK_THAT(oracle.small_ball(h), WithinAbs(exact, 4.0 * se + 1e-12));
    }
    const double h = oracle.bandwidth_for_probability(0.1);
    CHECK(oracle.small_ball(h) >= 0.1);
    CHECK_THAT(oracle.small_ball(h), WithinAbs(0.1, 1e-5));
    CHECK_THROWS_AS(oracle.bandwidth_for_probability(0.0), UsageError);
    CHECK(oracle.small_ball(1e-6) == 0.0);
}

TEST_CASE("box-kernel moments reduce to small-ball mass", "[oracle]") {
    RegressionModel reg;
    reg.r = RegressionFunction::sin_first();
    reg.noise_sd = 0.5;
    const ModelOracle oracle(LinearProcessModel::iid(2), reg, HilbertVector{0.3, 0.0},
                             Transform::identity(), 100000, 4);
    const auto m = oracle.kernel_moments(KernelSpec::box(), 0.8);
    CHECK_THAT(m.e_delta, WithinAbs(oracle.small_ball(0.8), 1e-15));
    CHECK_THAT(m.e_delta2, WithinAbs(m.e_delta, 1e-15));

    const auto f = oracle.finite(KernelSpec::box(), 0.8, std::sin(0.3));
    CHECK(f.sigma2_sq > 0.0);
    CHECK(f.sigma1_sq > f.sigma2_sq);
    // Box kernel: sigma_2^2 is close to the local conditional variance.
    CHECK_THAT(f.sigma2_sq, WithinRel(0.25 + 0.8 * 0.8 / 4.0 * std::cos(0.3) * std::cos(0.3), 0.3));
    CHECK_THROWS_AS(oracle.finite(KernelSpec::box(), 1e-9, 0.0), ExperimentError);
}

TEST_CASE("constant responses give zero oracle variances", "[oracle]") {
    const ModelOracle oracle(LinearProcessModel::iid(2), RegressionModel{}, HilbertVector::zeros(2),
                             Transform::identity(), 10000, 5);
    const auto f = oracle.finite(KernelSpec::slope(), 1.0, 0.0);
    CHECK(f.sigma1_sq == 0.0);
    CHECK(f.sigma2_sq == 0.0);
}

TEST_CASE("oracle normalization makes f_n unbiased", "[oracle]") {
    const auto model = LinearProcessModel::geometric(2, 2, 0.5);
    RegressionModel reg;
    reg.r = RegressionFunction::sin_first();
    reg.noise_sd = 0.5;
    const HilbertVector x{0.2, -0.1};
    const ModelOracle oracle(model, reg, x, Transform::identity(), 1000000, 6);
    EstimatorConfig cfg;
    cfg.kernel = KernelSpec::slope();
    cfg.h = oracle.bandwidth_for_probability(0.05);
    const double norm = oracle.kernel_moments(cfg.kernel, cfg.h).e_delta;

    constexpr int reps = 400;
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < reps; ++k) {
        const auto s = simulate(model, reg, 500, derive_seed(6, streams::replicate, k));
        const double f = numerator_denominator(s, x, cfg, norm).f_n;
        sum += f;
        sum2 += f * f;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - 1.0) <= 3.0 * se + 0.01);  // plus about two oracle standard errors
}

TEST_CASE("oracle rejects mismatched dimensions", "[oracle]") {
    CHECK_THROWS_AS(ModelOracle(LinearProcessModel::iid(2), RegressionModel{}, HilbertVector{0.0},
                                Transform::identity(), 10, 1),
                    UsageError);
}

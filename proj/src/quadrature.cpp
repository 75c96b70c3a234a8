#include "hilreg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hilreg/errors.hpp"

namespace hilreg {

namespace {
// Gaussian mass beyond 12 standard deviations is below 1e-32.
constexpr double kGaussianSpan = 12.0;
}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, unsigned max_depth) {
    if (!(std::isfinite(a) && std::isfinite(b))) throw UsageError("integration limits must be finite");
    if (a == b) return {0.0, 0.0};
    double err = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, max_depth, rel_tol, &err);
    return {value, err};
}

double gaussian_expectation(const std::function<double(double)>& f, double mean, double sd,
                            double rel_tol) {
    if (!(sd >= 0.0)) throw UsageError("standard deviation must be >= 0");
    if (sd == 0.0) return f(mean);
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    auto integrand = [&](double z) { return f(mean + sd * z) * norm * std::exp(-0.5 * z * z); };
    // Split at the mean so kinks of f near the center land on a panel edge.
    return integrate(integrand, -kGaussianSpan, 0.0, rel_tol).value +
           integrate(integrand, 0.0, kGaussianSpan, rel_tol).value;
}

double bivariate_gaussian_expectation(const std::function<double(double)>& f,
                                      const std::function<double(double)>& g, double var_u,
                                      double var_v, double cov, double rel_tol) {
    if (!(var_u > 0.0) || !(var_v >= 0.0)) throw UsageError("variances must be positive");
    const double slope = cov / var_u;
    const double cond_var = std::max(0.0, var_v - slope * cov);
    const double cond_sd = std::sqrt(cond_var);
    auto inner = [&](double u) {
        return f(u) * gaussian_expectation(g, slope * u, cond_sd, rel_tol);
    };
    return gaussian_expectation(inner, 0.0, std::sqrt(var_u), rel_tol);
}

}  // namespace hilreg

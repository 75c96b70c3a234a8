#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hilreg/estimator.hpp"

namespace hilreg {

/// A differentiable small-ball rate function phi(u) on (0, inf).
/// Menu: power(b) = u^b, and linear_quadratic = u (1 + u).
class SmallBallFunction {
public:
    enum class Kind { power, linear_quadratic };

    static SmallBallFunction power(double b);
    static SmallBallFunction linear_quadratic();

    double operator()(double u) const;
    double derivative(double u) const;

    Kind kind() const noexcept { return kind_; }
    double exponent() const noexcept { return b_; }
    std::string name() const;

private:
    SmallBallFunction(Kind kind, double b) : kind_(kind), b_(b) {}
    Kind kind_;
    double b_;
};

struct CjOptions {
    std::vector<double> u_sequence{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    double quadrature_tol = 1e-9;
    double convergence_tol = 1e-6;
};

struct CjEvaluation {
    double value;                 // I(u) at the last grid point
    double last_difference;       // |I(u_last) - I(u_prev)|, 0 for a one-point grid
    std::vector<double> u;
    std::vector<double> values;   // I(u) along the grid
};

/// I(u) = (u / phi(u)) int_0^1 K^j(y) phi'(u y) dy along a decreasing grid.
/// Throws UsageError for phi(u) = 0 or a bad grid, ConvergenceError when the
/// last successive difference exceeds the tolerance.
CjEvaluation evaluate_cj(const KernelSpec& kernel, const SmallBallFunction& phi, int j,
                         const CjOptions& options = {});

inline double compute_cj(const KernelSpec& kernel, const SmallBallFunction& phi, int j,
                         const CjOptions& options = {}) {
    return evaluate_cj(kernel, phi, j, options).value;
}

struct VarianceEstimate {
    double c1 = 1.0;
    double c2 = 1.0;
    double g2_hat = 0.0;
    double f1_hat = 0.0;
    double r_hat = 0.0;
    double sigma1_sq = 0.0;
    double sigma2_sq = 0.0;
    bool degenerate = false;  // g2_hat - r_hat^2 <= 0 (sigma2_sq clamped to 0)
    // echoed inputs
    std::size_t n = 0;
    double h = 0.0;
    double phi_h = 0.0;
};

/// Assembles sigma_1^2 and sigma_2^2 from the displayed formulas, flagging
/// (and clamping) a nonpositive conditional variance.
VarianceEstimate assemble_variance(double c1, double c2, double g2, double f1, double r);

/// Plug-in variances at x: g2_hat is the kernel regression of phi(Y)^2 with
/// the same weights as r_n, f1_hat = F_hat(h, x) / phi_h, and r_hat is r_ref
/// when given, r_n(x) otherwise. Throws NoNeighbors.
VarianceEstimate sigma_plugin(const FunctionalSample& sample, const HilbertVector& x,
                              const EstimatorConfig& cfg, double c1, double c2, double phi_h,
                              std::optional<double> r_ref = std::nullopt);

/// sqrt(n phi_h) (r_n - truth) / sqrt(sigma2_sq). Throws DegenerateVariance
/// when sigma2_sq <= 0.
double standardized_statistic(double r_n, double truth, std::size_t n, double phi_h,
                              double sigma2_sq);
double standardized_statistic(const FunctionalSample& sample, const HilbertVector& x,
                              const EstimatorConfig& cfg, double truth, double phi_h,
                              const VarianceEstimate& variance);

struct RateParams {
    double a = 1.0;
    double b = 1.0;
    double delta = 0.5;
    double beta = 1.0;

    void validate() const;
};

struct ConditionReport {
    RateParams params;
    std::size_t n = 0;
    double h = 0.0;
    double phi_h = 0.0;
    double exponent_threshold = 0.0;  // (2 + b) / (delta b)
    bool exponent_ok = false;         // a > threshold
    double dependence_term = 0.0;     // (log n)^2 phi_h^{a delta - (1 + 2/b)}, should -> 0
    double mass_term = 0.0;           // n phi_h^{1 + 2 delta}, should -> infinity
    double bias_term = 0.0;           // n h^{2 beta} phi_h, should -> 0
};

ConditionReport check_rate_conditions(const RateParams& params, std::size_t n, double h,
                                      double phi_h);

struct RatePoint {
    std::size_t n;
    double h;
    double phi_h;
};

/// Rate conditions along an increasing n-schedule. The three magnitude
/// conditions pass when their sequence is strictly monotone in the required
/// direction; they are left unset for schedules of fewer than two points.
struct ScheduleReport {
    RateParams params;
    std::vector<ConditionReport> points;
    bool exponent_ok = false;
    std::optional<bool> dependence_ok;
    std::optional<bool> mass_ok;
    std::optional<bool> bias_ok;
};

ScheduleReport check_rate_schedule(const RateParams& params, const std::vector<RatePoint>& schedule);

nlohmann::json to_json(const RateParams& params);
nlohmann::json to_json(const ConditionReport& report);
nlohmann::json to_json(const ScheduleReport& report);
nlohmann::json to_json(const VarianceEstimate& estimate);

}  // namespace hilreg

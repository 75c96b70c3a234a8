#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hilreg/hilbert.hpp"

namespace hilreg {

/// Kernels supported on [0, 1] with a strictly positive lower bound there:
///   box:   K(y) = 1
///   slope: K(y) = 2 - y
/// Both vanish outside [0, 1]; the window is closed at 1.
class KernelSpec {
public:
    enum class Kind { box, slope };

    static KernelSpec box() { return KernelSpec(Kind::box); }
    static KernelSpec slope() { return KernelSpec(Kind::slope); }
    static KernelSpec from_name(const std::string& name);

    /// K(y) for y in [0, 1], 0 for y > 1.
    double operator()(double y) const;

    Kind kind() const noexcept { return kind_; }
    std::string name() const { return kind_ == Kind::box ? "box" : "slope"; }
    double lower_bound() const noexcept { return 1.0; }
    double upper_bound() const noexcept { return kind_ == Kind::box ? 1.0 : 2.0; }
    /// Lipschitz constant on [0, 1].
    double lipschitz() const noexcept { return kind_ == Kind::box ? 0.0 : 1.0; }

private:
    explicit KernelSpec(Kind kind) : kind_(kind) {}
    Kind kind_;
};

struct EstimatorConfig {
    double h = 1.0;
    double b0 = 5.0;  // truncation level b_n = b0 log n
    Transform transform = Transform::identity();
    KernelSpec kernel = KernelSpec::box();

    void validate() const;
};

/// K(dist / h); zero iff dist > h.
double kernel_weight(const KernelSpec& kernel, double dist, double h);

/// Raw kernel sums over the sample around x.
struct KernelSums {
    std::size_t n = 0;
    std::size_t neighbors = 0;  // #{i : w_i > 0}
    double sum_w = 0.0;         // sum Delta_i
    double sum_wphi = 0.0;      // sum phi(Y_i) Delta_i
    double sum_wphi2 = 0.0;     // sum phi(Y_i)^2 Delta_i
    double min_distance = 0.0;
    double min_phi = 0.0;       // over indices with w_i > 0
    double max_phi = 0.0;
};
KernelSums kernel_sums(const FunctionalSample& sample, std::span<const double> x,
                       const EstimatorConfig& cfg);

/// r_n(x) = sum phi(Y_i) Delta_i / sum Delta_i. Throws NoNeighbors.
double regression_estimate(const FunctionalSample& sample, const HilbertVector& x,
                           const EstimatorConfig& cfg);

struct NumeratorDenominator {
    double g_n;
    double f_n;
};

/// g_n, f_n normalized by n * norm, where norm stands for E Delta_1(x).
NumeratorDenominator numerator_denominator(const FunctionalSample& sample, const HilbertVector& x,
                                           const EstimatorConfig& cfg, double norm);

/// Empirical stand-in for E Delta_1(x): (1/n) sum Delta_i = F_hat(h, x) * mean
/// in-window weight. Zero when no point is in the window.
double self_normalization(const FunctionalSample& sample, const HilbertVector& x,
                          const EstimatorConfig& cfg);

/// Numerator with responses |phi(Y_i)| > b0 log n dropped. Needs n >= 2.
double truncated_numerator(const FunctionalSample& sample, const HilbertVector& x,
                           const EstimatorConfig& cfg, double norm);

struct SmallBallEstimate {
    std::vector<double> u;
    std::vector<double> f_hat;
    std::optional<std::vector<double>> f_oracle;
};

/// F_hat(u, x) = (1/n) #{i : ||x - X_i|| <= u} on an increasing positive grid.
SmallBallEstimate small_ball_empirical(const FunctionalSample& sample, const HilbertVector& x,
                                       std::span<const double> u_grid);

/// max over gaps s = 1..max_gap of (1/(n-s)) #{i : D_i <= u and D_{i+s} <= u}.
double joint_small_ball(const FunctionalSample& sample, const HilbertVector& x, double u,
                        std::size_t max_gap);

struct CrossValidationResult {
    double h;
    std::vector<double> h_grid;
    std::vector<double> loss;           // mean squared LOO error; +inf when nothing evaluable
    std::vector<std::size_t> evaluated;  // per grid value: held-out points with a neighbor
    std::vector<std::size_t> skipped;    // per grid value: held-out points hitting NoNeighbors
};

/// Leave-one-out bandwidth choice over `h_grid`; ties go to the smaller h.
/// `eval_indices` restricts the held-out points (empty = every index).
CrossValidationResult cross_validate_bandwidth(const FunctionalSample& sample,
                                               std::span<const std::size_t> eval_indices,
                                               std::span<const double> h_grid,
                                               const EstimatorConfig& cfg);

}  // namespace hilreg

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hilreg/estimator.hpp"
#include "hilreg/process.hpp"

namespace hilreg {

/// Model-side truths at one query point, estimated from a large stationary
/// Monte Carlo draw of (X, Y). The small-ball rate is taken as phi(h) := F(h, x),
/// so that f_1(x) = 1.
///
/// For the identity transform, the per-draw moments of phi(Y) are replaced by
/// the exact conditional moments given X (the law of Y | X is Gaussian), which
/// removes the response noise from the Monte Carlo error.
class ModelOracle {
public:
    ModelOracle(const LinearProcessModel& model, const RegressionModel& reg,
                const HilbertVector& x, const Transform& phi, std::size_t draws,
                std::uint64_t seed);

    std::size_t draws() const noexcept { return dist_.size(); }

    /// F(h, x) = P(||x - X|| <= h).
    double small_ball(double h) const;
    /// Smallest sampled distance h with F(h, x) >= p.
    double bandwidth_for_probability(double p) const;

    struct KernelMoments {
        double e_delta;      // E Delta
        double e_delta2;     // E Delta^2
        double e_phi_delta;  // E phi(Y) Delta
        double e_phi_delta2; // E phi(Y) Delta^2
        double e_phi2_delta2;// E phi(Y)^2 Delta^2
    };
    KernelMoments kernel_moments(const KernelSpec& kernel, double h) const;

    struct Finite {
        double phi_h;      // F(h, x)
        double e_delta;    // E Delta_1(x)
        double sigma1_sq;  // phi(h) Var(phi(Y) Delta) / (E Delta)^2
        double sigma2_sq;  // phi(h) Var((phi(Y) - r(x)) Delta) / (E Delta)^2
    };
    /// Finite-h variances with r(x) the exact conditional mean.
    Finite finite(const KernelSpec& kernel, double h, double r_x) const;

private:
    std::vector<double> dist_;  // sorted
    std::vector<double> m1_;    // E[phi(Y) | X] or phi(Y), aligned with dist_
    std::vector<double> m2_;    // E[phi(Y)^2 | X] or phi(Y)^2
};

}  // namespace hilreg

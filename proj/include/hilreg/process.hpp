#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hilreg/coefficients.hpp"
#include "hilreg/hilbert.hpp"
#include "hilreg/rng.hpp"

namespace hilreg {

/// Finite moving average X_i = sum_{m=0..q} a_m eps_{i-m} driven by i.i.d.
/// standard Gaussian innovations in R^d.
class LinearProcessModel {
public:
    explicit LinearProcessModel(std::vector<Eigen::MatrixXd> weights);

    /// q = 0, a_0 = I: i.i.d. standard Gaussian design.
    static LinearProcessModel iid(std::size_t d);
    /// a_m = rho^m I for m = 0..q.
    static LinearProcessModel geometric(std::size_t d, std::size_t q, double rho);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(weights_.front().rows()); }
    std::size_t order() const noexcept { return weights_.size() - 1; }
    const Eigen::MatrixXd& weight(std::size_t m) const { return weights_.at(m); }
    const std::vector<Eigen::MatrixXd>& weights() const noexcept { return weights_; }

    /// Cov(X_i, X_{i+s}) = sum_m a_m a_{m+s}^T (zero for s > q).
    Eigen::MatrixXd lag_covariance(std::size_t s) const;
    Eigen::MatrixXd marginal_covariance() const { return lag_covariance(0); }

    bool nonnegative_weights() const;

private:
    std::vector<Eigen::MatrixXd> weights_;
};

/// Regression functions of the first basis coordinate u = <x, e_1>, each with
/// its declared Holder exponent beta and constant c7.
class RegressionFunction {
public:
    enum class Kind { zero, sin_first, square_first_clipped };

    static RegressionFunction zero() { return RegressionFunction(Kind::zero); }
    /// r(x) = sin(<x, e_1>); beta = 1, c7 = 1.
    static RegressionFunction sin_first() { return RegressionFunction(Kind::sin_first); }
    /// r(x) = clamp(<x, e_1>^2, -10, 10); beta = 1, c7 = 2 sqrt(10).
    static RegressionFunction square_first_clipped() {
        return RegressionFunction(Kind::square_first_clipped);
    }
    static RegressionFunction from_name(const std::string& name);

    double of_first(double u) const;
    double operator()(std::span<const double> x) const { return of_first(x[0]); }
    double operator()(const HilbertVector& x) const { return of_first(x[0]); }

    Kind kind() const noexcept { return kind_; }
    std::string name() const;
    double holder_exponent() const noexcept { return 1.0; }
    double holder_constant() const;

private:
    explicit RegressionFunction(Kind kind) : kind_(kind) {}
    Kind kind_;
};

enum class NoiseMode { independent, shared_innovation };

/// Y_i = r(X_i) + noise_sd * eta_i                        (independent)
/// Y_i = r(X_i) + theta * eps_i^1 + noise_sd * eta_i      (shared_innovation)
/// with eta_i i.i.d. N(0, 1) independent of everything else.
struct RegressionModel {
    RegressionFunction r = RegressionFunction::zero();
    double noise_sd = 0.0;
    NoiseMode noise_mode = NoiseMode::independent;
    double theta = 0.0;

    void validate() const;
};

std::string to_string(NoiseMode mode);
NoiseMode noise_mode_from_string(const std::string& text);

/// Reusable sampler for paths of fixed length n; keeps its buffers between
/// draws. Innovations eps_{1-q}..eps_n are drawn first (row-major), then the n
/// response noises.
class PathSampler {
public:
    PathSampler(const LinearProcessModel& model, const RegressionModel& reg, std::size_t n);

    void draw(Rng& rng);

    std::size_t size() const noexcept { return n_; }
    std::span<const double> x(std::size_t i) const { return {x_.data() + i * d_, d_}; }
    double y(std::size_t i) const { return y_[i]; }
    std::vector<double>& xs() noexcept { return x_; }
    std::vector<double>& ys() noexcept { return y_; }

private:
    const LinearProcessModel& model_;
    RegressionModel reg_;
    std::size_t n_;
    std::size_t d_;
    std::vector<double> eps_;
    std::vector<double> x_;
    std::vector<double> y_;
};

/// One-shot PathSampler draw: X_1..X_n row-major into `x`, Y into `y`.
void draw_path(const LinearProcessModel& model, const RegressionModel& reg, std::size_t n,
               Rng& rng, std::vector<double>& x, std::vector<double>& y);

FunctionalSample simulate(const LinearProcessModel& model, const RegressionModel& reg,
                          std::size_t n, std::uint64_t seed);

/// Gaussian law of Y given X = x: mean r(x) + theta E[eps^1 | X = x],
/// variance theta^2 Var(eps^1 | X = x) + noise_sd^2.
struct ConditionalResponse {
    double mean;
    double sd;
};
ConditionalResponse conditional_response(const LinearProcessModel& model,
                                         const RegressionModel& reg, const HilbertVector& x);

/// E[phi(Y) | X = x] and E[phi(Y)^2 | X = x].
struct ConditionalMoments {
    double r;
    double g2;
};
ConditionalMoments conditional_moments(const LinearProcessModel& model,
                                       const RegressionModel& reg, const Transform& phi,
                                       const HilbertVector& x);

/// Cov(Z_i, Z_{i+s}) for Z_i = (X_i^1, ..., X_i^d, Y_i); a (d+1)x(d+1) matrix.
Eigen::MatrixXd joint_lag_covariance(const LinearProcessModel& model, const RegressionModel& reg,
                                     std::size_t s);

/// Exact lambda_{i,i+s} for s = 0..max_lag plus the tail sequence lambda_k.
DependenceCoefficients theoretical_lambda(const LinearProcessModel& model,
                                          const RegressionModel& reg, std::size_t max_lag);

}  // namespace hilreg

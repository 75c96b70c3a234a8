#include "hilreg/process.hpp"

#include <algorithm>
#include <cmath>

#include "hilreg/dependence.hpp"
#include "hilreg/errors.hpp"
#include "hilreg/quadrature.hpp"

namespace hilreg {

LinearProcessModel::LinearProcessModel(std::vector<Eigen::MatrixXd> weights)
    : weights_(std::move(weights)) {
    if (weights_.empty()) throw UsageError("linear process needs at least the weight a_0");
    const auto d = weights_.front().rows();
    if (d < 1) throw UsageError("linear process dimension must be >= 1");
    for (const auto& a : weights_) {
        if (a.rows() != d || a.cols() != d) throw UsageError("all weights must be d x d");
        if (!a.allFinite()) throw UsageError("weights must be finite");
    }
}

LinearProcessModel LinearProcessModel::iid(std::size_t d) {
    if (d == 0) throw UsageError("dimension must be >= 1");
    const auto n = static_cast<Eigen::Index>(d);
    return LinearProcessModel({Eigen::MatrixXd::Identity(n, n)});
}

LinearProcessModel LinearProcessModel::geometric(std::size_t d, std::size_t q, double rho) {
    if (d == 0) throw UsageError("dimension must be >= 1");
    const auto n = static_cast<Eigen::Index>(d);
    std::vector<Eigen::MatrixXd> w;
    for (std::size_t m = 0; m <= q; ++m) {
        w.push_back(std::pow(rho, static_cast<double>(m)) * Eigen::MatrixXd::Identity(n, n));
    }
    return LinearProcessModel(std::move(w));
}

Eigen::MatrixXd LinearProcessModel::lag_covariance(std::size_t s) const {
    const auto d = static_cast<Eigen::Index>(dim());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t m = 0; m + s <= order(); ++m) c += weights_[m] * weights_[m + s].transpose();
    return c;
}

bool LinearProcessModel::nonnegative_weights() const {
    return std::all_of(weights_.begin(), weights_.end(),
                       [](const Eigen::MatrixXd& a) { return (a.array() >= 0.0).all(); });
}

// ---------------------------------------------------------------------------

RegressionFunction RegressionFunction::from_name(const std::string& name) {
    if (name == "zero") return zero();
    if (name == "sin_first") return sin_first();
    if (name == "square_first_clipped") return square_first_clipped();
    throw UsageError("unknown regression function '" + name + "'");
}

double RegressionFunction::of_first(double u) const {
    switch (kind_) {
        case Kind::zero:
            return 0.0;
        case Kind::sin_first:
            return std::sin(u);
        case Kind::square_first_clipped:
            return std::clamp(u * u, -10.0, 10.0);
    }
    return 0.0;
}

std::string RegressionFunction::name() const {
    switch (kind_) {
        case Kind::zero:
            return "zero";
        case Kind::sin_first:
            return "sin_first";
        case Kind::square_first_clipped:
            return "square_first_clipped";
    }
    return "zero";
}

double RegressionFunction::holder_constant() const {
    switch (kind_) {
        case Kind::zero:
            return 0.0;
        case Kind::sin_first:
            return 1.0;
        case Kind::square_first_clipped:
            return 2.0 * std::sqrt(10.0);
    }
    return 0.0;
}

void RegressionModel::validate() const {
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw UsageError("noise_sd must be >= 0");
    if (!std::isfinite(theta)) throw UsageError("theta must be finite");
}

std::string to_string(NoiseMode mode) {
    return mode == NoiseMode::independent ? "independent" : "shared_innovation";
}

NoiseMode noise_mode_from_string(const std::string& text) {
    if (text == "independent") return NoiseMode::independent;
    if (text == "shared_innovation" || text == "shared") return NoiseMode::shared_innovation;
    throw UsageError("unknown noise mode '" + text + "'");
}

// ---------------------------------------------------------------------------

PathSampler::PathSampler(const LinearProcessModel& model, const RegressionModel& reg,
                         std::size_t n)
    : model_(model), reg_(reg), n_(n), d_(model.dim()) {
    reg_.validate();
    eps_.resize((n_ + model_.order()) * d_);
    x_.resize(n_ * d_);
    y_.resize(n_);
}

void PathSampler::draw(Rng& rng) {
    const std::size_t d = d_;
    const std::size_t q = model_.order();
    std::normal_distribution<double> normal(0.0, 1.0);

    // eps row t corresponds to innovation index t + 1 - q (t = 0..n+q-1).
    for (double& e : eps_) e = normal(rng);

    std::fill(x_.begin(), x_.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        double* xi = x_.data() + i * d;
        for (std::size_t m = 0; m <= q; ++m) {
            const Eigen::MatrixXd& a = model_.weight(m);
            const double* e = eps_.data() + (i + q - m) * d;
            for (std::size_t k = 0; k < d; ++k) {
                double s = 0.0;
                for (std::size_t l = 0; l < d; ++l) {
                    s += a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) * e[l];
                }
                xi[k] += s;
            }
        }
    }

    const bool shared = reg_.noise_mode == NoiseMode::shared_innovation;
    for (std::size_t i = 0; i < n_; ++i) {
        double v = reg_.r(std::span<const double>(x_.data() + i * d, d));
        if (shared) v += reg_.theta * eps_[(i + q) * d];
        y_[i] = v;
    }
    if (reg_.noise_sd > 0.0) {
        for (std::size_t i = 0; i < n_; ++i) y_[i] += reg_.noise_sd * normal(rng);
    }
}

void draw_path(const LinearProcessModel& model, const RegressionModel& reg, std::size_t n,
               Rng& rng, std::vector<double>& x, std::vector<double>& y) {
    PathSampler sampler(model, reg, n);
    sampler.draw(rng);
    x = std::move(sampler.xs());
    y = std::move(sampler.ys());
}

FunctionalSample simulate(const LinearProcessModel& model, const RegressionModel& reg,
                          std::size_t n, std::uint64_t seed) {
    if (n < 1) throw UsageError("simulate needs n >= 1");
    reg.validate();
    Rng rng(derive_seed(seed, streams::simulate, 0));
    std::vector<double> x;
    std::vector<double> y;
    draw_path(model, reg, n, rng, x, y);
    return FunctionalSample(model.dim(), std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------

ConditionalResponse conditional_response(const LinearProcessModel& model,
                                         const RegressionModel& reg, const HilbertVector& x) {
    if (x.dim() != model.dim()) throw UsageError("query dimension does not match the model");
    reg.validate();
    double mean = reg.r(x);
    double var = reg.noise_sd * reg.noise_sd;
    if (reg.noise_mode == NoiseMode::shared_innovation && reg.theta != 0.0) {
        // (eps_i, X_i) is jointly Gaussian with Cov(eps_i, X_i) = a_0^T.
        const Eigen::MatrixXd sigma = model.marginal_covariance();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
            ldlt.vectorD().minCoeff() <= 1e-14 * sigma.norm()) {
            throw UsageError("design covariance is singular; conditional law undefined");
        }
        const Eigen::VectorXd c = model.weight(0).col(0);  // Cov(X, eps^1)
        const Eigen::Map<const Eigen::VectorXd> xv(x.coeffs().data(),
                                                   static_cast<Eigen::Index>(x.dim()));
        const Eigen::VectorXd w = ldlt.solve(c);
        const double cond_mean = w.dot(xv);
        const double cond_var = std::max(0.0, 1.0 - c.dot(w));
        mean += reg.theta * cond_mean;
        var += reg.theta * reg.theta * cond_var;
    }
    return {mean, std::sqrt(var)};
}

ConditionalMoments conditional_moments(const LinearProcessModel& model,
                                       const RegressionModel& reg, const Transform& phi,
                                       const HilbertVector& x) {
    const auto law = conditional_response(model, reg, x);
    if (phi.kind() == Transform::Kind::identity) {
        return {law.mean, law.mean * law.mean + law.sd * law.sd};
    }
    const double r = gaussian_expectation([&](double y) { return phi(y); }, law.mean, law.sd);
    const double g2 = gaussian_expectation(
        [&](double y) {
            const double v = phi(y);
            return v * v;
        },
        law.mean, law.sd);
    return {r, g2};
}

namespace {

struct ResponseMoments {
    double mean_r;   // E r(U)
    double kappa;    // E[r(U) U] / Var U; Cov(r(U), W) = kappa Cov(U, W) for Gaussian W
};

ResponseMoments response_moments(const RegressionFunction& r, double var_u) {
    if (r.kind() == RegressionFunction::Kind::zero || var_u <= 0.0) return {r.of_first(0.0), 0.0};
    const double sd = std::sqrt(var_u);
    const double mean = gaussian_expectation([&](double u) { return r.of_first(u); }, 0.0, sd);
    const double ru = gaussian_expectation([&](double u) { return r.of_first(u) * u; }, 0.0, sd);
    return {mean, ru / var_u};
}

}  // namespace

Eigen::MatrixXd joint_lag_covariance(const LinearProcessModel& model, const RegressionModel& reg,
                                     std::size_t s) {
    reg.validate();
    const auto d = static_cast<Eigen::Index>(model.dim());
    const std::size_t q = model.order();
    const Eigen::MatrixXd gamma = model.lag_covariance(s);
    const Eigen::MatrixXd sigma = model.marginal_covariance();
    const double var_u = sigma(0, 0);
    const auto rm = response_moments(reg.r, var_u);
    const double theta = reg.noise_mode == NoiseMode::shared_innovation ? reg.theta : 0.0;

    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d + 1, d + 1);
    c.topLeftCorner(d, d) = gamma;

    // E[X_i eps_j^T] = a_{i-j} for 0 <= i-j <= q; here j = i+s on the Y side.
    const Eigen::MatrixXd a_s = s <= q ? model.weight(s) : Eigen::MatrixXd::Zero(d, d);
    const Eigen::MatrixXd a_0 = model.weight(0);

    for (Eigen::Index k = 0; k < d; ++k) {
        // Cov(X_i^k, Y_{i+s})
        double xy = rm.kappa * gamma(k, 0);
        if (s == 0) xy += theta * a_0(k, 0);
        c(k, d) = xy;
        // Cov(Y_i, X_{i+s}^k)
        c(d, k) = rm.kappa * gamma(0, k) + theta * a_s(k, 0);
    }

    double yy = 0.0;
    if (reg.r.kind() != RegressionFunction::Kind::zero && var_u > 0.0) {
        auto rf = [&](double u) { return reg.r.of_first(u); };
        yy += bivariate_gaussian_expectation(rf, rf, var_u, var_u, gamma(0, 0)) -
              rm.mean_r * rm.mean_r;
    }
    yy += theta * rm.kappa * a_s(0, 0);  // Cov(eps_i^1, r(X_{i+s}))
    if (s == 0) {
        yy += theta * rm.kappa * a_0(0, 0);  // Cov(r(X_i), eps_i^1)
        yy += theta * theta + reg.noise_sd * reg.noise_sd;
    }
    c(d, d) = yy;
    return c;
}

DependenceCoefficients theoretical_lambda(const LinearProcessModel& model,
                                          const RegressionModel& reg, std::size_t max_lag) {
    std::vector<double> lag(max_lag + 1, 0.0);
    for (std::size_t s = 0; s <= max_lag; ++s) {
        // Beyond the MA order every block vanishes: all terms involve
        // innovations more than q steps apart.
        if (s > model.order()) break;
        lag[s] = joint_lag_covariance(model, reg, s).cwiseAbs().sum();
    }
    DependenceCoefficients out;
    out.lambda_k = lambda_tail(lag, max_lag + 1);
    out.lag_lambda = std::move(lag);
    return out;
}

}  // namespace hilreg

#include "hilreg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hilreg/errors.hpp"

namespace hilreg {

ModelOracle::ModelOracle(const LinearProcessModel& model, const RegressionModel& reg,
                         const HilbertVector& x, const Transform& phi, std::size_t draws,
                         std::uint64_t seed) {
    if (draws < 1) throw UsageError("oracle needs at least one draw");
    if (x.dim() != model.dim()) throw UsageError("query dimension does not match the model");
    reg.validate();
    const std::size_t d = model.dim();

    // Y | X ~ N(r(X) + theta <w, X>, s^2) with w = Sigma^{-1} Cov(X, eps^1).
    const bool rao_blackwell = phi.kind() == Transform::Kind::identity;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    double cond_var = reg.noise_sd * reg.noise_sd;
    const bool shared = reg.noise_mode == NoiseMode::shared_innovation && reg.theta != 0.0;
    bool exact = rao_blackwell;
    if (exact && shared) {
        const Eigen::MatrixXd sigma = model.marginal_covariance();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
            ldlt.vectorD().minCoeff() <= 1e-14 * sigma.norm()) {
            exact = false;
        } else {
            const Eigen::VectorXd c = model.weight(0).col(0);
            w = ldlt.solve(c);
            cond_var += reg.theta * reg.theta * std::max(0.0, 1.0 - c.dot(w));
            w *= reg.theta;
        }
    }

    PathSampler sampler(model, reg, 1);
    Rng rng(seed);
    std::vector<double> dist(draws);
    std::vector<double> m1(draws);
    std::vector<double> m2(draws);
    for (std::size_t k = 0; k < draws; ++k) {
        sampler.draw(rng);
        const auto xk = sampler.x(0);
        dist[k] = distance(x.coeffs(), xk);
        if (exact) {
            double mean = reg.r(xk);
            for (std::size_t l = 0; l < d; ++l) mean += w(static_cast<Eigen::Index>(l)) * xk[l];
            m1[k] = mean;
            m2[k] = mean * mean + cond_var;
        } else {
            const double p = phi(sampler.y(0));
            m1[k] = p;
            m2[k] = p * p;
        }
    }

    std::vector<std::size_t> order(draws);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    dist_.resize(draws);
    m1_.resize(draws);
    m2_.resize(draws);
    for (std::size_t k = 0; k < draws; ++k) {
        dist_[k] = dist[order[k]];
        m1_[k] = m1[order[k]];
        m2_[k] = m2[order[k]];
    }
}

double ModelOracle::small_ball(double h) const {
    const auto count = std::upper_bound(dist_.begin(), dist_.end(), h) - dist_.begin();
    return static_cast<double>(count) / static_cast<double>(dist_.size());
}

double ModelOracle::bandwidth_for_probability(double p) const {
    if (!(p > 0.0) || p > 1.0) throw UsageError("target probability must lie in (0, 1]");
    const auto need = static_cast<std::size_t>(std::ceil(p * static_cast<double>(dist_.size())));
    return dist_[std::max<std::size_t>(need, 1) - 1];
}

ModelOracle::KernelMoments ModelOracle::kernel_moments(const KernelSpec& kernel, double h) const {
    if (!(h > 0.0)) throw UsageError("bandwidth h must be > 0");
    KernelMoments m{};
    for (std::size_t k = 0; k < dist_.size() && dist_[k] <= h; ++k) {
        const double w = kernel_weight(kernel, dist_[k], h);
        m.e_delta += w;
        m.e_delta2 += w * w;
        m.e_phi_delta += w * m1_[k];
        m.e_phi_delta2 += w * w * m1_[k];
        m.e_phi2_delta2 += w * w * m2_[k];
    }
    const double n = static_cast<double>(dist_.size());
    m.e_delta /= n;
    m.e_delta2 /= n;
    m.e_phi_delta /= n;
    m.e_phi_delta2 /= n;
    m.e_phi2_delta2 /= n;
    return m;
}

ModelOracle::Finite ModelOracle::finite(const KernelSpec& kernel, double h, double r_x) const {
    const auto m = kernel_moments(kernel, h);
    if (!(m.e_delta > 0.0)) {
        throw ExperimentError("oracle draw has no point within bandwidth " + std::to_string(h));
    }
    Finite f;
    f.phi_h = small_ball(h);
    f.e_delta = m.e_delta;
    const double e2 = m.e_delta * m.e_delta;
    const double var1 = m.e_phi2_delta2 - m.e_phi_delta * m.e_phi_delta;
    const double centered_mean = m.e_phi_delta - r_x * m.e_delta;
    const double var2 = m.e_phi2_delta2 - 2.0 * r_x * m.e_phi_delta2 + r_x * r_x * m.e_delta2 -
                        centered_mean * centered_mean;
    // Cancellation leaves rounding residue when phi(Y) is a.s. constant.
    const double tiny = 1e-12 * m.e_phi2_delta2;
    f.sigma1_sq = var1 > tiny ? f.phi_h * var1 / e2 : 0.0;
    f.sigma2_sq = var2 > tiny ? f.phi_h * var2 / e2 : 0.0;
    return f;
}

}  // namespace hilreg

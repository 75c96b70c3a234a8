#include "hilreg/asymptotics.hpp"

#include <cmath>

#include "hilreg/errors.hpp"
#include "hilreg/quadrature.hpp"

namespace hilreg {

SmallBallFunction SmallBallFunction::power(double b) {
    if (!(b > 0.0) || !std::isfinite(b)) throw UsageError("small-ball exponent must be > 0");
    return {Kind::power, b};
}

SmallBallFunction SmallBallFunction::linear_quadratic() { return {Kind::linear_quadratic, 1.0}; }

double SmallBallFunction::operator()(double u) const {
    if (kind_ == Kind::power) return std::pow(u, b_);
    return u * (1.0 + u);
}

double SmallBallFunction::derivative(double u) const {
    if (kind_ == Kind::power) return b_ * std::pow(u, b_ - 1.0);
    return 1.0 + 2.0 * u;
}

std::string SmallBallFunction::name() const {
    if (kind_ == Kind::linear_quadratic) return "u(1+u)";
    return "u^" + std::to_string(b_);
}

CjEvaluation evaluate_cj(const KernelSpec& kernel, const SmallBallFunction& phi, int j,
                         const CjOptions& options) {
    if (j != 1 && j != 2) throw UsageError("C_j is defined for j = 1, 2");
    const auto& grid = options.u_sequence;
    if (grid.empty()) throw UsageError("u sequence is empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] > 0.0)) throw UsageError("u sequence must be positive");
        if (k > 0 && !(grid[k] < grid[k - 1])) throw UsageError("u sequence must decrease");
    }

    CjEvaluation out;
    for (double u : grid) {
        const double phi_u = phi(u);
        if (!(phi_u != 0.0) || !std::isfinite(phi_u)) {
            throw UsageError("small-ball function vanishes at u = " + std::to_string(u));
        }
        auto integrand = [&](double y) {
            const double k = kernel(y);
            return std::pow(k, j) * phi.derivative(u * y);
        };
        const double integral = integrate(integrand, 0.0, 1.0, options.quadrature_tol).value;
        out.u.push_back(u);
        out.values.push_back(u / phi_u * integral);
    }
    out.value = out.values.back();
    out.last_difference =
        out.values.size() > 1 ? std::abs(out.values.back() - out.values[out.values.size() - 2]) : 0.0;
    if (out.last_difference > options.convergence_tol) {
        throw ConvergenceError("C_j did not settle: last successive difference " +
                               std::to_string(out.last_difference));
    }
    return out;
}

VarianceEstimate assemble_variance(double c1, double c2, double g2, double f1, double r) {
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw UsageError("kernel constants must be > 0");
    if (!(f1 > 0.0)) throw UsageError("f1 must be > 0");
    VarianceEstimate v;
    v.c1 = c1;
    v.c2 = c2;
    v.g2_hat = g2;
    v.f1_hat = f1;
    v.r_hat = r;
    const double scale = c2 / (c1 * c1) / f1;
    v.sigma1_sq = scale * g2;
    const double cond_var = g2 - r * r;
    // Rounding leaves a few ulps of g2 when phi(Y) is constant in the window.
    if (cond_var <= 1e-12 * std::abs(g2)) {
        v.degenerate = true;
        v.sigma2_sq = 0.0;
    } else {
        v.sigma2_sq = scale * cond_var;
    }
    return v;
}

VarianceEstimate sigma_plugin(const FunctionalSample& sample, const HilbertVector& x,
                              const EstimatorConfig& cfg, double c1, double c2, double phi_h,
                              std::optional<double> r_ref) {
    if (!(phi_h > 0.0) || !std::isfinite(phi_h)) throw UsageError("phi_h must be > 0");
    const auto s = kernel_sums(sample, x.coeffs(), cfg);
    if (s.neighbors == 0) throw NoNeighbors(s.min_distance, cfg.h);
    const double g2 = s.sum_wphi2 / s.sum_w;
    const double r = r_ref ? *r_ref : s.sum_wphi / s.sum_w;
    const double f_hat = static_cast<double>(s.neighbors) / static_cast<double>(s.n);
    auto v = assemble_variance(c1, c2, g2, f_hat / phi_h, r);
    v.n = s.n;
    v.h = cfg.h;
    v.phi_h = phi_h;
    return v;
}

double standardized_statistic(double r_n, double truth, std::size_t n, double phi_h,
                              double sigma2_sq) {
    if (!(phi_h > 0.0)) throw UsageError("phi_h must be > 0");
    if (!(sigma2_sq > 0.0) || !std::isfinite(sigma2_sq)) {
        throw DegenerateVariance("sigma_2^2 is not positive; the statistic is undefined");
    }
    return std::sqrt(static_cast<double>(n) * phi_h) * (r_n - truth) / std::sqrt(sigma2_sq);
}

double standardized_statistic(const FunctionalSample& sample, const HilbertVector& x,
                              const EstimatorConfig& cfg, double truth, double phi_h,
                              const VarianceEstimate& variance) {
    if (variance.degenerate) throw DegenerateVariance("variance estimate is flagged degenerate");
    const double r_n = regression_estimate(sample, x, cfg);
    return standardized_statistic(r_n, truth, sample.size(), phi_h, variance.sigma2_sq);
}

void RateParams::validate() const {
    if (!(a > 0.0) || !(b > 0.0) || !(beta > 0.0)) throw UsageError("a, b, beta must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw UsageError("delta must lie in (0, 1)");
}

ConditionReport check_rate_conditions(const RateParams& params, std::size_t n, double h,
                                      double phi_h) {
    params.validate();
    if (n < 2) throw UsageError("rate conditions need n >= 2");
    if (!(h > 0.0) || !(phi_h > 0.0)) throw UsageError("h and phi_h must be > 0");
    ConditionReport r;
    r.params = params;
    r.n = n;
    r.h = h;
    r.phi_h = phi_h;
    r.exponent_threshold = (2.0 + params.b) / (params.delta * params.b);
    r.exponent_ok = params.a > r.exponent_threshold;
    const double nn = static_cast<double>(n);
    const double logn = std::log(nn);
    r.dependence_term =
        logn * logn * std::pow(phi_h, params.a * params.delta - (1.0 + 2.0 / params.b));
    r.mass_term = nn * std::pow(phi_h, 1.0 + 2.0 * params.delta);
    r.bias_term = nn * std::pow(h, 2.0 * params.beta) * phi_h;
    return r;
}

namespace {

template <class Get>
std::optional<bool> strictly_monotone(const std::vector<ConditionReport>& pts, bool increasing,
                                      Get get) {
    if (pts.size() < 2) return std::nullopt;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const double prev = get(pts[k - 1]);
        const double cur = get(pts[k]);
        if (increasing ? !(cur > prev) : !(cur < prev)) return false;
    }
    return true;
}

}  // namespace

ScheduleReport check_rate_schedule(const RateParams& params, const std::vector<RatePoint>& schedule) {
    params.validate();
    if (schedule.empty()) throw UsageError("rate schedule is empty");
    ScheduleReport out;
    out.params = params;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (k > 0 && schedule[k].n <= schedule[k - 1].n) {
            throw UsageError("rate schedule must have increasing n");
        }
        out.points.push_back(
            check_rate_conditions(params, schedule[k].n, schedule[k].h, schedule[k].phi_h));
    }
    out.exponent_ok = out.points.front().exponent_ok;
    out.dependence_ok = strictly_monotone(out.points, false,
                                          [](const ConditionReport& r) { return r.dependence_term; });
    out.mass_ok =
        strictly_monotone(out.points, true, [](const ConditionReport& r) { return r.mass_term; });
    out.bias_ok =
        strictly_monotone(out.points, false, [](const ConditionReport& r) { return r.bias_term; });
    return out;
}

nlohmann::json to_json(const RateParams& p) {
    return {{"a", p.a}, {"b", p.b}, {"delta", p.delta}, {"beta", p.beta}};
}

nlohmann::json to_json(const ConditionReport& r) {
    return {{"params", to_json(r.params)},
            {"n", r.n},
            {"h", r.h},
            {"phi_h", r.phi_h},
            {"exponent_threshold", r.exponent_threshold},
            {"exponent_ok", r.exponent_ok},
            {"dependence_term", r.dependence_term},
            {"mass_term", r.mass_term},
            {"bias_term", r.bias_term}};
}

namespace {
nlohmann::json opt(const std::optional<bool>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
}  // namespace

nlohmann::json to_json(const ScheduleReport& r) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : r.points) pts.push_back(to_json(p));
    return {{"params", to_json(r.params)},
            {"exponent_ok", r.exponent_ok},
            {"dependence_ok", opt(r.dependence_ok)},
            {"mass_ok", opt(r.mass_ok)},
            {"bias_ok", opt(r.bias_ok)},
            {"points", std::move(pts)}};
}

nlohmann::json to_json(const VarianceEstimate& v) {
    return {{"c1", v.c1},         {"c2", v.c2},
            {"g2_hat", v.g2_hat}, {"f1_hat", v.f1_hat},
            {"r_hat", v.r_hat},   {"sigma1_sq", v.sigma1_sq},
            {"sigma2_sq", v.sigma2_sq}, {"degenerate", v.degenerate},
            {"n", v.n},           {"h", v.h},
            {"phi_h", v.phi_h}};
}

}  // namespace hilreg

#include "hilreg/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hilreg/errors.hpp"

namespace hilreg {

KernelSpec KernelSpec::from_name(const std::string& name) {
    if (name == "box") return box();
    if (name == "slope") return slope();
    throw UsageError("unknown kernel '" + name + "'");
}

double KernelSpec::operator()(double y) const {
    if (y < 0.0 || y > 1.0) return 0.0;
    return kind_ == Kind::box ? 1.0 : 2.0 - y;
}

void EstimatorConfig::validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("bandwidth h must be finite and > 0");
    if (!(b0 > 0.0) || !std::isfinite(b0)) throw UsageError("truncation scale b0 must be > 0");
}

double kernel_weight(const KernelSpec& kernel, double dist, double h) {
    if (!(h > 0.0)) throw UsageError("bandwidth h must be > 0");
    if (!(dist >= 0.0)) throw UsageError("distance must be >= 0");
    if (dist > h) return 0.0;
    return kernel(dist / h);
}

KernelSums kernel_sums(const FunctionalSample& sample, std::span<const double> x,
                       const EstimatorConfig& cfg) {
    cfg.validate();
    if (x.size() != sample.dim()) throw UsageError("query dimension does not match the sample");
    KernelSums s;
    s.n = sample.size();
    s.min_distance = std::numeric_limits<double>::infinity();
    s.min_phi = std::numeric_limits<double>::infinity();
    s.max_phi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double dist = distance(x, sample.x(i));
        s.min_distance = std::min(s.min_distance, dist);
        const double w = kernel_weight(cfg.kernel, dist, cfg.h);
        if (w <= 0.0) continue;
        const double p = cfg.transform(sample.y(i));
        ++s.neighbors;
        s.sum_w += w;
        s.sum_wphi += w * p;
        s.sum_wphi2 += w * p * p;
        s.min_phi = std::min(s.min_phi, p);
        s.max_phi = std::max(s.max_phi, p);
    }
    return s;
}

double regression_estimate(const FunctionalSample& sample, const HilbertVector& x,
                           const EstimatorConfig& cfg) {
    const auto s = kernel_sums(sample, x.coeffs(), cfg);
    if (s.neighbors == 0) throw NoNeighbors(s.min_distance, cfg.h);
    // A convex combination of the in-window phi(Y_i); clamp rounding spill.
    return std::clamp(s.sum_wphi / s.sum_w, s.min_phi, s.max_phi);
}

NumeratorDenominator numerator_denominator(const FunctionalSample& sample, const HilbertVector& x,
                                           const EstimatorConfig& cfg, double norm) {
    if (!(norm > 0.0) || !std::isfinite(norm)) throw UsageError("normalizer must be finite and > 0");
    const auto s = kernel_sums(sample, x.coeffs(), cfg);
    const double scale = static_cast<double>(s.n) * norm;
    return {s.sum_wphi / scale, s.sum_w / scale};
}

double self_normalization(const FunctionalSample& sample, const HilbertVector& x,
                          const EstimatorConfig& cfg) {
    const auto s = kernel_sums(sample, x.coeffs(), cfg);
    return s.sum_w / static_cast<double>(s.n);
}

double truncated_numerator(const FunctionalSample& sample, const HilbertVector& x,
                           const EstimatorConfig& cfg, double norm) {
    if (!(norm > 0.0) || !std::isfinite(norm)) throw UsageError("normalizer must be finite and > 0");
    if (sample.size() < 2) throw UsageError("truncation level b0 log n needs n >= 2");
    cfg.validate();
    if (x.dim() != sample.dim()) throw UsageError("query dimension does not match the sample");
    const double b_n = cfg.b0 * std::log(static_cast<double>(sample.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double w = kernel_weight(cfg.kernel, distance(x.coeffs(), sample.x(i)), cfg.h);
        if (w <= 0.0) continue;
        const double p = cfg.transform(sample.y(i));
        if (std::abs(p) <= b_n) sum += w * p;
    }
    return sum / (static_cast<double>(sample.size()) * norm);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> distances_to(const FunctionalSample& sample, const HilbertVector& x) {
    if (x.dim() != sample.dim()) throw UsageError("query dimension does not match the sample");
    std::vector<double> d(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) d[i] = distance(x.coeffs(), sample.x(i));
    return d;
}

}  // namespace

SmallBallEstimate small_ball_empirical(const FunctionalSample& sample, const HilbertVector& x,
                                       std::span<const double> u_grid) {
    if (u_grid.empty()) throw UsageError("small-ball grid is empty");
    for (std::size_t k = 0; k < u_grid.size(); ++k) {
        if (!(u_grid[k] > 0.0)) throw UsageError("small-ball grid must be positive");
        if (k > 0 && !(u_grid[k] > u_grid[k - 1])) throw UsageError("small-ball grid must increase");
    }
    auto d = distances_to(sample, x);
    std::sort(d.begin(), d.end());
    SmallBallEstimate est;
    est.u.assign(u_grid.begin(), u_grid.end());
    const double n = static_cast<double>(d.size());
    for (double u : u_grid) {
        const auto count = std::upper_bound(d.begin(), d.end(), u) - d.begin();
        est.f_hat.push_back(static_cast<double>(count) / n);
    }
    return est;
}

double joint_small_ball(const FunctionalSample& sample, const HilbertVector& x, double u,
                        std::size_t max_gap) {
    if (!(u > 0.0)) throw UsageError("radius u must be > 0");
    if (max_gap < 1) throw UsageError("max_gap must be >= 1");
    if (sample.size() <= max_gap) throw UsageError("sample too short for the requested gap");
    const auto d = distances_to(sample, x);
    std::vector<char> inside(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) inside[i] = d[i] <= u;
    double best = 0.0;
    for (std::size_t s = 1; s <= max_gap; ++s) {
        std::size_t count = 0;
        for (std::size_t i = 0; i + s < d.size(); ++i) count += inside[i] && inside[i + s];
        best = std::max(best, static_cast<double>(count) / static_cast<double>(d.size() - s));
    }
    return best;
}

// ---------------------------------------------------------------------------

CrossValidationResult cross_validate_bandwidth(const FunctionalSample& sample,
                                               std::span<const std::size_t> eval_indices,
                                               std::span<const double> h_grid,
                                               const EstimatorConfig& cfg) {
    if (h_grid.empty()) throw UsageError("bandwidth grid is empty");
    for (double h : h_grid) {
        if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("bandwidth grid must be positive");
    }
    const std::size_t n = sample.size();
    std::vector<std::size_t> held;
    if (eval_indices.empty()) {
        held.resize(n);
        for (std::size_t i = 0; i < n; ++i) held[i] = i;
    } else {
        for (std::size_t i : eval_indices) {
            if (i >= n) throw UsageError("evaluation index out of range");
            held.push_back(i);
        }
    }

    std::vector<double> phi(n);
    for (std::size_t i = 0; i < n; ++i) phi[i] = cfg.transform(sample.y(i));

    CrossValidationResult result;
    result.h_grid.assign(h_grid.begin(), h_grid.end());
    result.loss.assign(h_grid.size(), std::numeric_limits<double>::infinity());
    result.evaluated.assign(h_grid.size(), 0);
    result.skipped.assign(h_grid.size(), 0);

    std::vector<double> dist(n);
    std::vector<double> sq_err(h_grid.size(), 0.0);
    for (std::size_t i : held) {
        for (std::size_t j = 0; j < n; ++j) dist[j] = distance(sample.x(i), sample.x(j));
        for (std::size_t g = 0; g < h_grid.size(); ++g) {
            double sw = 0.0;
            double swp = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double w = kernel_weight(cfg.kernel, dist[j], h_grid[g]);
                sw += w;
                swp += w * phi[j];
            }
            if (sw > 0.0) {
                const double e = phi[i] - swp / sw;
                sq_err[g] += e * e;
                ++result.evaluated[g];
            } else {
                ++result.skipped[g];
            }
        }
    }

    std::optional<std::size_t> best;
    for (std::size_t g = 0; g < h_grid.size(); ++g) {
        if (result.evaluated[g] == 0) continue;
        result.loss[g] = sq_err[g] / static_cast<double>(result.evaluated[g]);
        if (!best || result.loss[g] < result.loss[*best] ||
            (result.loss[g] == result.loss[*best] && h_grid[g] < h_grid[*best])) {
            best = g;
        }
    }
    if (!best) throw SelectionError("every bandwidth in the grid left all points without neighbors");
    result.h = h_grid[*best];
    return result;
}

}  // namespace hilreg

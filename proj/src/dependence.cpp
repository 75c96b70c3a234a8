#include "hilreg/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "hilreg/errors.hpp"
#include "hilreg/parallel.hpp"

namespace hilreg {

std::vector<double> lambda_tail(std::span<const double> lag_lambda, std::size_t n_horizon) {
    for (double v : lag_lambda) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw UsageError("lag coefficients must be finite and nonnegative");
        }
    }
    // Lags t >= n_horizon cannot occur inside a window of n_horizon indices.
    const std::size_t len = std::min(lag_lambda.size(), n_horizon);
    std::vector<double> tail(lag_lambda.size(), 0.0);
    double acc = 0.0;
    for (std::size_t k = len; k-- > 1;) {
        acc += lag_lambda[k];
        tail[k] = 2.0 * acc;
    }
    if (!tail.empty()) tail[0] = (len > 0 ? lag_lambda[0] : 0.0) + 2.0 * acc;
    return tail;
}

// ---------------------------------------------------------------------------

LipschitzProbe::LipschitzProbe(std::vector<double> weights, double offset)
    : weights_(std::move(weights)), offset_(offset), lip_(0.0) {
    if (weights_.empty()) throw UsageError("probe needs at least one weight");
    for (double w : weights_) {
        if (!std::isfinite(w)) throw UsageError("probe weights must be finite");
        lip_ = std::max(lip_, std::abs(w));
    }
    if (!std::isfinite(offset_)) throw UsageError("probe offset must be finite");
}

LipschitzProbe LipschitzProbe::random(std::size_t m, Rng& rng, bool monotone) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> scale_dist(0.25, 2.0);
    std::uniform_real_distribution<double> offset_dist(-0.5, 0.5);
    const double scale = scale_dist(rng);
    std::vector<double> w(m);
    for (double& v : w) {
        v = scale * normal(rng);
        if (monotone) v = std::abs(v);
    }
    return LipschitzProbe(std::move(w), offset_dist(rng));
}

double LipschitzProbe::operator()(std::span<const double> z) const {
    if (z.size() != weights_.size()) throw UsageError("probe arity mismatch");
    double s = offset_;
    for (std::size_t k = 0; k < z.size(); ++k) s += weights_[k] * z[k];
    return std::clamp(s, -1.0, 1.0);
}

// ---------------------------------------------------------------------------

namespace {

struct IndexLayout {
    std::size_t base;
    std::size_t length;
};

IndexLayout validate_indices(std::span<const std::size_t> index_i,
                             std::span<const std::size_t> index_j) {
    if (index_i.empty() || index_j.empty()) throw UsageError("index sets must be nonempty");
    std::set<std::size_t> seen(index_i.begin(), index_i.end());
    if (seen.size() != index_i.size()) throw UsageError("index set I has duplicates");
    std::set<std::size_t> seen_j(index_j.begin(), index_j.end());
    if (seen_j.size() != index_j.size()) throw UsageError("index set J has duplicates");
    for (std::size_t j : index_j) {
        if (seen.count(j)) throw UsageError("index sets I and J must be disjoint");
    }
    seen.insert(index_j.begin(), index_j.end());
    return {*seen.begin(), *seen.rbegin() - *seen.begin() + 1};
}

double lambda_block_sum(const DependenceCoefficients& coeffs, std::span<const std::size_t> index_i,
                        std::span<const std::size_t> index_j) {
    double s = 0.0;
    for (std::size_t i : index_i) {
        for (std::size_t j : index_j) {
            const std::size_t lag = i > j ? i - j : j - i;
            if (lag < coeffs.lag_lambda.size()) s += coeffs.lag_lambda[lag];
        }
    }
    return s;
}

ProbeResult run_probe(const LinearProcessModel& model, const RegressionModel& reg,
                      std::span<const std::size_t> index_i, std::span<const std::size_t> index_j,
                      const IndexLayout& layout, const LipschitzProbe& f, const LipschitzProbe& g,
                      std::size_t mc_samples, double lambda_sum, Rng& rng) {
    const std::size_t width = model.dim() + 1;
    if (f.arity() != index_i.size() * width || g.arity() != index_j.size() * width) {
        throw UsageError("probe arity must be |I|(d+1) and |J|(d+1)");
    }
    PathSampler sampler(model, reg, layout.length);
    std::vector<double> zi(f.arity());
    std::vector<double> zj(g.arity());
    std::vector<double> fv(mc_samples);
    std::vector<double> gv(mc_samples);

    auto gather = [&](std::span<const std::size_t> idx, std::vector<double>& z) {
        std::size_t pos = 0;
        for (std::size_t t : idx) {
            const auto x = sampler.x(t - layout.base);
            std::copy(x.begin(), x.end(), z.begin() + static_cast<std::ptrdiff_t>(pos));
            z[pos + width - 1] = sampler.y(t - layout.base);
            pos += width;
        }
    };

    for (std::size_t m = 0; m < mc_samples; ++m) {
        sampler.draw(rng);
        gather(index_i, zi);
        gather(index_j, zj);
        fv[m] = f(zi);
        gv[m] = g(zj);
    }

    const double n = static_cast<double>(mc_samples);
    double fbar = 0.0;
    double gbar = 0.0;
    for (std::size_t m = 0; m < mc_samples; ++m) {
        fbar += fv[m];
        gbar += gv[m];
    }
    fbar /= n;
    gbar /= n;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t m = 0; m < mc_samples; ++m) {
        const double p = (fv[m] - fbar) * (gv[m] - gbar);
        sum += p;
        sum_sq += p * p;
    }
    const double mean_p = sum / n;
    const double cov_hat = mc_samples > 1 ? sum / (n - 1.0) : 0.0;
    const double var_p = mc_samples > 1 ? std::max(0.0, (sum_sq - n * mean_p * mean_p) / (n - 1.0)) : 0.0;
    const double se = std::sqrt(var_p / n);

    ProbeResult r;
    r.lip_f = f.lipschitz();
    r.lip_g = g.lipschitz();
    r.bound = r.lip_f * r.lip_g * lambda_sum;
    r.cov_hat = cov_hat;
    r.se = se;
    r.margin = r.bound + 3.0 * se - std::abs(cov_hat);
    return r;
}

CheckReport assemble(std::span<const std::size_t> index_i, std::span<const std::size_t> index_j,
                     std::size_t mc_samples, std::uint64_t seed, double lambda_sum,
                     std::vector<ProbeResult> results) {
    CheckReport report;
    report.index_i.assign(index_i.begin(), index_i.end());
    report.index_j.assign(index_j.begin(), index_j.end());
    report.mc_samples = mc_samples;
    report.seed = seed;
    report.lambda_sum = lambda_sum;
    report.probes = results.size();
    report.worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& r : results) {
        if (r.margin < 0.0) ++report.violations;
        report.worst_margin = std::min(report.worst_margin, r.margin);
    }
    report.per_probe = std::move(results);
    return report;
}

std::size_t max_lag_of(std::span<const std::size_t> index_i, std::span<const std::size_t> index_j) {
    std::size_t lag = 0;
    for (std::size_t i : index_i)
        for (std::size_t j : index_j) lag = std::max(lag, i > j ? i - j : j - i);
    return lag;
}

}  // namespace

CheckReport qa_inequality_check(const LinearProcessModel& model, const RegressionModel& reg,
                                std::span<const std::size_t> index_i,
                                std::span<const std::size_t> index_j, std::size_t probes,
                                std::size_t mc_samples, std::uint64_t seed, unsigned threads) {
    if (probes < 1 || mc_samples < 1) throw UsageError("need at least one probe and one path");
    const auto layout = validate_indices(index_i, index_j);
    const auto coeffs = theoretical_lambda(model, reg, max_lag_of(index_i, index_j));
    const double lambda_sum = lambda_block_sum(coeffs, index_i, index_j);
    const std::size_t width = model.dim() + 1;

    std::vector<ProbeResult> results(probes);
    parallel_for(probes, threads, [&](std::size_t p) {
        Rng rng(derive_seed(seed, streams::probe, p));
        const bool monotone = (p % 2) == 1;
        const auto f = LipschitzProbe::random(index_i.size() * width, rng, monotone);
        const auto g = LipschitzProbe::random(index_j.size() * width, rng, monotone);
        results[p] = run_probe(model, reg, index_i, index_j, layout, f, g, mc_samples, lambda_sum, rng);
    });
    return assemble(index_i, index_j, mc_samples, seed, lambda_sum, std::move(results));
}

CheckReport qa_inequality_check(const LinearProcessModel& model, const RegressionModel& reg,
                                std::span<const std::size_t> index_i,
                                std::span<const std::size_t> index_j,
                                std::span<const ProbePair> probes, std::size_t mc_samples,
                                std::uint64_t seed, unsigned threads) {
    if (probes.empty() || mc_samples < 1) throw UsageError("need at least one probe and one path");
    const auto layout = validate_indices(index_i, index_j);
    const auto coeffs = theoretical_lambda(model, reg, max_lag_of(index_i, index_j));
    const double lambda_sum = lambda_block_sum(coeffs, index_i, index_j);

    std::vector<ProbeResult> results(probes.size());
    parallel_for(probes.size(), threads, [&](std::size_t p) {
        Rng rng(derive_seed(seed, streams::probe, p));
        results[p] = run_probe(model, reg, index_i, index_j, layout, probes[p].f, probes[p].g,
                               mc_samples, lambda_sum, rng);
    });
    return assemble(index_i, index_j, mc_samples, seed, lambda_sum, std::move(results));
}

nlohmann::json to_json(const CheckReport& report) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& r : report.per_probe) {
        per.push_back({{"lip_f", r.lip_f},
                       {"lip_g", r.lip_g},
                       {"bound", r.bound},
                       {"cov_hat", r.cov_hat},
                       {"se", r.se},
                       {"margin", r.margin}});
    }
    return {{"probes", report.probes},
            {"violations", report.violations},
            {"violation_rate", report.violation_rate()},
            {"worst_margin", report.worst_margin},
            {"lambda_sum", report.lambda_sum},
            {"I", report.index_i},
            {"J", report.index_j},
            {"mc_samples", report.mc_samples},
            {"seed", report.seed},
            {"per_probe", std::move(per)}};
}

nlohmann::json to_json(const DependenceCoefficients& coeffs) {
    return {{"lag_lambda", coeffs.lag_lambda}, {"lambda_k", coeffs.lambda_k}};
}

}  // namespace hilreg

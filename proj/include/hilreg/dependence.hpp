#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "hilreg/coefficients.hpp"
#include "hilreg/process.hpp"
#include "hilreg/rng.hpp"

namespace hilreg {

/// Per-index dependence tail: lambda_k = sup_{s>=k} sum_{j:|i-j|>=s} Lambda(|i-j|)
/// over an index window of length `n_horizon`. For k >= 1 this is
/// 2 * sum_{k<=t<n_horizon} Lambda(t); lambda_0 adds the diagonal once.
std::vector<double> lambda_tail(std::span<const double> lag_lambda, std::size_t n_horizon);

/// Bounded Lipschitz test function z -> clamp(<w, z> + c, -1, 1) on R^m.
/// Lipschitz constants are taken with respect to the l1 norm on R^m, for
/// which the affine part has operator norm max_k |w_k|.
class LipschitzProbe {
public:
    LipschitzProbe(std::vector<double> weights, double offset);

    /// Random probe on R^m. Monotone probes have nonnegative weights.
    static LipschitzProbe random(std::size_t m, Rng& rng, bool monotone);

    double operator()(std::span<const double> z) const;
    double lipschitz() const noexcept { return lip_; }
    std::size_t arity() const noexcept { return weights_.size(); }
    std::span<const double> weights() const noexcept { return weights_; }
    double offset() const noexcept { return offset_; }

private:
    std::vector<double> weights_;
    double offset_;
    double lip_;
};

struct ProbeResult {
    double lip_f;
    double lip_g;
    double bound;
    double cov_hat;
    double se;
    double margin;  // bound + 3 se - |cov_hat|
};

struct CheckReport {
    std::vector<std::size_t> index_i;
    std::vector<std::size_t> index_j;
    std::size_t mc_samples = 0;
    std::uint64_t seed = 0;
    double lambda_sum = 0.0;  // sum_{i in I} sum_{j in J} lambda_{ij}
    std::size_t probes = 0;
    std::size_t violations = 0;
    double worst_margin = 0.0;
    std::vector<ProbeResult> per_probe;

    double violation_rate() const {
        return probes == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(probes);
    }
};

struct ProbePair {
    LipschitzProbe f;
    LipschitzProbe g;
};

/// Monte Carlo check of the quasi-association covariance inequality for
/// Z_i = (X_i, Y_i): |Cov(f(Z_I), g(Z_J))| <= Lip(f) Lip(g) sum lambda_{ij},
/// with `probes` random probe pairs and `mc_samples` independent paths each.
/// Index sets are time indices and must be disjoint.
CheckReport qa_inequality_check(const LinearProcessModel& model, const RegressionModel& reg,
                                std::span<const std::size_t> index_i,
                                std::span<const std::size_t> index_j, std::size_t probes,
                                std::size_t mc_samples, std::uint64_t seed, unsigned threads = 1);

/// Same check with caller-supplied probes (probe p uses seed stream p).
CheckReport qa_inequality_check(const LinearProcessModel& model, const RegressionModel& reg,
                                std::span<const std::size_t> index_i,
                                std::span<const std::size_t> index_j,
                                std::span<const ProbePair> probes, std::size_t mc_samples,
                                std::uint64_t seed, unsigned threads = 1);

nlohmann::json to_json(const CheckReport& report);
nlohmann::json to_json(const DependenceCoefficients& coeffs);

}  // namespace hilreg

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hilreg/estimator.hpp"
#include "hilreg/oracle.hpp"
#include "hilreg/process.hpp"

namespace hilreg {

enum class Normalization { oracle, empirical };
std::string to_string(Normalization mode);
Normalization normalization_from_string(const std::string& text);

struct BandwidthRule {
    enum class Kind { fixed, power, small_ball_target };
    Kind kind = Kind::fixed;
    double h = 1.0;         // fixed
    double c = 1.0;         // power: h = c n^{-kappa}
    double kappa = 0.2;
    double target = 100.0;  // small_ball_target: n F(h, x) = target

    void validate() const;
    double resolve(std::size_t n, const ModelOracle& oracle) const;
    std::string name() const;
};

struct ExperimentConfig {
    LinearProcessModel model = LinearProcessModel::iid(1);
    RegressionModel reg;
    HilbertVector x = HilbertVector::zeros(1);
    std::vector<std::size_t> n_schedule{1000};
    BandwidthRule bandwidth;
    std::size_t replicates = 500;
    std::uint64_t seed = 0;
    Normalization normalization = Normalization::oracle;
    KernelSpec kernel = KernelSpec::box();
    Transform transform = Transform::identity();
    double b0 = 5.0;
    std::size_t oracle_draws = 1'000'000;
    std::size_t bootstrap = 200;
    bool self_test = false;  // replace the statistics by i.i.d. N(0, 1) draws
    unsigned threads = 1;

    void validate() const;
};

/// Kolmogorov distance between the empirical law of `values` and N(0, 1).
double ks_normal_distance(std::span<const double> values);

/// 1.63 / sqrt(M), the asymptotic critical value at level 0.01.
inline double ks_threshold(std::size_t m) { return 1.63 / std::sqrt(static_cast<double>(m)); }

struct NormalityReport {
    std::vector<double> stats;
    double mean = 0.0;
    double variance = 0.0;  // (M - 1) denominator
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double ks_distance = 0.0;
    double ks_threshold = 0.0;
    bool ks_pass = false;
    bool degenerate = false;  // all statistics equal, or the reference variance is zero
    std::vector<std::pair<double, double>> qq;  // (theoretical, empirical), sorted
};

/// Moments, KS distance and QQ pairs of the given statistics (M >= 2).
NormalityReport summarize_normality(std::vector<double> stats);

struct CltRow {
    std::size_t replicate;
    std::optional<double> r_hat;
    std::optional<double> stat_oracle;
    std::optional<double> stat_plugin;
};

struct CltBlock {
    std::size_t n = 0;
    double h = 0.0;
    double phi_h = 0.0;          // oracle F(h, x)
    double e_delta = 0.0;        // oracle E Delta_1(x)
    double r_true = 0.0;
    double sigma2_oracle = 0.0;  // finite-h oracle sigma_2^2
    double sigma2_limit = 0.0;
    std::size_t no_neighbors = 0;
    std::size_t plugin_degenerate = 0;
    std::vector<CltRow> rows;
    NormalityReport oracle;
    std::optional<NormalityReport> plugin;
};

struct CltReport {
    bool self_test = false;
    Normalization normalization = Normalization::oracle;
    double c1 = 1.0;
    double c2 = 1.0;
    std::vector<CltBlock> blocks;

    const NormalityReport& primary() const { return blocks.back().oracle; }
};

CltReport run_clt_experiment(const ExperimentConfig& cfg);

struct RatioEstimate {
    double ratio;
    double ci_low;
    double ci_high;
};

struct VarianceBlock {
    std::size_t n = 0;
    double h = 0.0;
    double phi_h = 0.0;
    double e_delta = 0.0;
    std::size_t no_neighbors = 0;
    std::vector<double> g_n;
    std::vector<double> f_n;
    std::vector<double> centered;   // g_n - r(x) f_n
    double scaled_var_g = 0.0;      // n phi(h) Var(g_n)
    double scaled_var_centered = 0.0;
    std::optional<RatioEstimate> sigma1;
    std::optional<RatioEstimate> sigma2;
};

struct VarianceConvergenceReport {
    double c1 = 1.0;
    double c2 = 1.0;
    double r_true = 0.0;
    double g2_true = 0.0;
    double sigma1_sq = 0.0;  // limit values
    double sigma2_sq = 0.0;
    std::vector<VarianceBlock> blocks;
    /// |last ratio - 1| < |first ratio - 1|; unset when undefined.
    std::optional<bool> sigma1_toward_one;
    std::optional<bool> sigma2_toward_one;
};

VarianceConvergenceReport run_variance_experiment(const ExperimentConfig& cfg);

nlohmann::json to_json(const NormalityReport& report, bool with_stats = true);
nlohmann::json to_json(const CltReport& report);
nlohmann::json to_json(const VarianceConvergenceReport& report);

/// Writes stats.csv, qq.csv and report.json under `dir`; returns the file
/// names written. Throws IoError.
std::vector<std::string> write_clt_outputs(const std::string& dir, const CltReport& report);
/// Writes stats.csv and report.json under `dir`.
std::vector<std::string> write_variance_outputs(const std::string& dir,
                                                const VarianceConvergenceReport& report);

}  // namespace hilreg

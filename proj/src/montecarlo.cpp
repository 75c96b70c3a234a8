#include "hilreg/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "hilreg/asymptotics.hpp"
#include "hilreg/errors.hpp"
#include "hilreg/format.hpp"
#include "hilreg/parallel.hpp"
#include "hilreg/rng.hpp"

namespace hilreg {

std::string to_string(Normalization mode) {
    return mode == Normalization::oracle ? "oracle" : "empirical";
}

Normalization normalization_from_string(const std::string& text) {
    if (text == "oracle") return Normalization::oracle;
    if (text == "empirical") return Normalization::empirical;
    throw UsageError("unknown normalization '" + text + "' (expected oracle or empirical)");
}

void BandwidthRule::validate() const {
    switch (kind) {
        case Kind::fixed:
            if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("fixed bandwidth must be > 0");
            break;
        case Kind::power:
            if (!(c > 0.0) || !std::isfinite(c)) throw UsageError("bandwidth scale c must be > 0");
            if (!std::isfinite(kappa)) throw UsageError("bandwidth exponent must be finite");
            break;
        case Kind::small_ball_target:
            if (!(target > 0.0) || !std::isfinite(target)) {
                throw UsageError("small-ball target must be > 0");
            }
            break;
    }
}

double BandwidthRule::resolve(std::size_t n, const ModelOracle& oracle) const {
    switch (kind) {
        case Kind::fixed:
            return h;
        case Kind::power:
            return c * std::pow(static_cast<double>(n), -kappa);
        case Kind::small_ball_target: {
            const double p = target / static_cast<double>(n);
            if (p > 1.0) throw UsageError("small-ball target exceeds n");
            return oracle.bandwidth_for_probability(p);
        }
    }
    return h;
}

std::string BandwidthRule::name() const {
    switch (kind) {
        case Kind::fixed:
            return "fixed";
        case Kind::power:
            return "power";
        case Kind::small_ball_target:
            return "small_ball_target";
    }
    return "fixed";
}

void ExperimentConfig::validate() const {
    reg.validate();
    bandwidth.validate();
    if (x.dim() != model.dim()) throw UsageError("query point dimension does not match the model");
    if (replicates < 2) throw UsageError("an experiment needs at least 2 replicates");
    if (n_schedule.empty()) throw UsageError("n schedule is empty");
    for (std::size_t k = 0; k < n_schedule.size(); ++k) {
        if (n_schedule[k] < 2) throw UsageError("every n in the schedule must be >= 2");
        if (k > 0 && n_schedule[k] <= n_schedule[k - 1]) {
            throw UsageError("n schedule must be strictly increasing");
        }
    }
    if (!(b0 > 0.0)) throw UsageError("b0 must be > 0");
    if (oracle_draws < 1000) throw UsageError("oracle_draws must be >= 1000");
    if (bootstrap < 1) throw UsageError("bootstrap must be >= 1");
}

// ---------------------------------------------------------------------------

namespace {

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

// Linear interpolation between order statistics (R type 7).
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double sample_variance(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

double ks_normal_distance(std::span<const double> values) {
    if (values.size() < 2) throw UsageError("KS distance needs at least 2 values");
    std::vector<double> v(values.begin(), values.end());
    for (double x : v) {
        if (!std::isfinite(x)) throw UsageError("KS distance needs finite values");
    }
    std::sort(v.begin(), v.end());
    const double m = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = normal_cdf(v[i]);
        d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
    }
    return d;
}

NormalityReport summarize_normality(std::vector<double> stats) {
    if (stats.size() < 2) throw UsageError("normality summary needs at least 2 values");
    NormalityReport r;
    r.stats = std::move(stats);
    // Moments from the sorted copy: invariant under reordering of replicates.
    std::vector<double> sorted = r.stats;
    std::sort(sorted.begin(), sorted.end());
    const double m = static_cast<double>(sorted.size());
    double mean = 0.0;
    for (double x : sorted) mean += x;
    mean /= m;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : sorted) {
        const double c = x - mean;
        m2 += c * c;
        m3 += c * c * c;
        m4 += c * c * c * c;
    }
    r.mean = mean;
    r.variance = m2 / (m - 1.0);
    m2 /= m;
    m3 /= m;
    m4 /= m;
    r.degenerate = !(m2 > 0.0);
    if (!r.degenerate) {
        r.skewness = m3 / std::pow(m2, 1.5);
        r.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    r.ks_distance = ks_normal_distance(sorted);
    r.ks_threshold = ks_threshold(sorted.size());
    r.ks_pass = r.ks_distance < r.ks_threshold;
    r.qq.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        r.qq.emplace_back(normal_quantile((static_cast<double>(i) + 0.5) / m), sorted[i]);
    }
    return r;
}

// ---------------------------------------------------------------------------

namespace {

struct Truth {
    double c1;
    double c2;
    double r;
    double g2;
};

// Limit constants with phi(h) := F(h, x): near a point where the Gaussian
// design has a positive density, F(u, x) behaves like u^d, so C_j is taken
// for that rate and f_1(x) = 1.
Truth model_truth(const ExperimentConfig& cfg) {
    const auto phi = SmallBallFunction::power(static_cast<double>(cfg.model.dim()));
    const double c1 = compute_cj(cfg.kernel, phi, 1);
    const double c2 = compute_cj(cfg.kernel, phi, 2);
    const auto cm = conditional_moments(cfg.model, cfg.reg, cfg.transform, cfg.x);
    return {c1, c2, cm.r, cm.g2};
}

EstimatorConfig estimator_of(const ExperimentConfig& cfg, double h) {
    EstimatorConfig e;
    e.h = h;
    e.b0 = cfg.b0;
    e.kernel = cfg.kernel;
    e.transform = cfg.transform;
    return e;
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t block, std::size_t r) {
    return derive_seed(master, streams::replicate, (static_cast<std::uint64_t>(block) << 32) | r);
}

FunctionalSample draw_sample(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x;
    std::vector<double> y;
    draw_path(cfg.model, cfg.reg, n, rng, x, y);
    return FunctionalSample(cfg.model.dim(), std::move(x), std::move(y));
}

void check_failures(std::size_t failures, std::size_t m, std::size_t n, const char* what) {
    if (20 * failures > m) {
        throw ExperimentError(std::to_string(failures) + " of " + std::to_string(m) +
                              " replicates at n = " + std::to_string(n) + " hit " + what +
                              "; the bandwidth is too small");
    }
}

CltReport self_test_report(const ExperimentConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, streams::self_test, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    CltBlock block;
    std::vector<double> stats(cfg.replicates);
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        stats[r] = normal(rng);
        block.rows.push_back({r, std::nullopt, stats[r], std::nullopt});
    }
    block.oracle = summarize_normality(std::move(stats));
    CltReport report;
    report.self_test = true;
    report.normalization = cfg.normalization;
    report.blocks.push_back(std::move(block));
    return report;
}

}  // namespace

CltReport run_clt_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.self_test) return self_test_report(cfg);

    const Truth truth = model_truth(cfg);
    const ModelOracle oracle(cfg.model, cfg.reg, cfg.x, cfg.transform, cfg.oracle_draws,
                             derive_seed(cfg.seed, streams::oracle, 0));
    CltReport report;
    report.normalization = cfg.normalization;
    report.c1 = truth.c1;
    report.c2 = truth.c2;

    const double kernel_ratio = truth.c2 / (truth.c1 * truth.c1);
    for (std::size_t b = 0; b < cfg.n_schedule.size(); ++b) {
        const std::size_t n = cfg.n_schedule[b];
        CltBlock block;
        block.n = n;
        block.h = cfg.bandwidth.resolve(n, oracle);
        const auto fin = oracle.finite(cfg.kernel, block.h, truth.r);
        block.phi_h = fin.phi_h;
        block.e_delta = fin.e_delta;
        block.r_true = truth.r;
        block.sigma2_oracle = fin.sigma2_sq;
        block.sigma2_limit = std::max(0.0, kernel_ratio * (truth.g2 - truth.r * truth.r));
        const bool degenerate = !(block.sigma2_oracle > 0.0);
        const auto est = estimator_of(cfg, block.h);

        block.rows.resize(cfg.replicates);
        parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
            const auto sample = draw_sample(cfg, n, replicate_seed(cfg.seed, b, r));
            const auto s = kernel_sums(sample, cfg.x.coeffs(), est);
            CltRow row{r, std::nullopt, std::nullopt, std::nullopt};
            if (s.neighbors > 0) {
                const double r_n = std::clamp(s.sum_wphi / s.sum_w, s.min_phi, s.max_phi);
                const double f_hat = static_cast<double>(s.neighbors) / static_cast<double>(n);
                const double phi_h =
                    cfg.normalization == Normalization::oracle ? block.phi_h : f_hat;
                row.r_hat = r_n;
                row.stat_oracle = degenerate ? 0.0
                                             : standardized_statistic(r_n, truth.r, n, phi_h,
                                                                      block.sigma2_oracle);
                const auto plug =
                    assemble_variance(truth.c1, truth.c2, s.sum_wphi2 / s.sum_w, f_hat / phi_h, r_n);
                if (!plug.degenerate) {
                    row.stat_plugin = standardized_statistic(r_n, truth.r, n, phi_h, plug.sigma2_sq);
                }
            }
            block.rows[r] = row;
        });

        std::vector<double> oracle_stats;
        std::vector<double> plugin_stats;
        for (const auto& row : block.rows) {
            if (!row.r_hat) {
                ++block.no_neighbors;
                continue;
            }
            oracle_stats.push_back(*row.stat_oracle);
            if (row.stat_plugin) {
                plugin_stats.push_back(*row.stat_plugin);
            } else {
                ++block.plugin_degenerate;
            }
        }
        check_failures(block.no_neighbors, cfg.replicates, n, "NoNeighbors");
        if (!degenerate) check_failures(block.plugin_degenerate, cfg.replicates, n, "a degenerate plug-in variance");
        if (oracle_stats.size() < 2) {
            throw ExperimentError("fewer than 2 usable replicates at n = " + std::to_string(n));
        }
        block.oracle = summarize_normality(std::move(oracle_stats));
        block.oracle.degenerate = block.oracle.degenerate || degenerate;
        if (plugin_stats.size() >= 2) block.plugin = summarize_normality(std::move(plugin_stats));
        report.blocks.push_back(std::move(block));
    }
    return report;
}

// ---------------------------------------------------------------------------

namespace {

RatioEstimate bootstrap_ratio(std::span<const double> values, double scale, double sigma_sq,
                              std::size_t b_count, std::uint64_t seed) {
    RatioEstimate est;
    est.ratio = scale * sample_variance(values) / sigma_sq;
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<double> boot(b_count);
    std::vector<double> resample(values.size());
    for (std::size_t k = 0; k < b_count; ++k) {
        for (double& v : resample) v = values[pick(rng)];
        boot[k] = scale * sample_variance(resample) / sigma_sq;
    }
    std::sort(boot.begin(), boot.end());
    est.ci_low = quantile_sorted(boot, 0.025);
    est.ci_high = quantile_sorted(boot, 0.975);
    return est;
}

std::optional<bool> toward_one(const std::vector<VarianceBlock>& blocks,
                               std::optional<RatioEstimate> VarianceBlock::*field) {
    if (blocks.size() < 2) return std::nullopt;
    const auto& first = blocks.front().*field;
    const auto& last = blocks.back().*field;
    if (!first || !last) return std::nullopt;
    return std::abs(last->ratio - 1.0) < std::abs(first->ratio - 1.0);
}

}  // namespace

VarianceConvergenceReport run_variance_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.normalization != Normalization::oracle) {
        throw UsageError("the variance experiment needs oracle normalization");
    }
    if (cfg.self_test) throw UsageError("self-test mode applies to the CLT experiment only");

    const Truth truth = model_truth(cfg);
    const ModelOracle oracle(cfg.model, cfg.reg, cfg.x, cfg.transform, cfg.oracle_draws,
                             derive_seed(cfg.seed, streams::oracle, 0));
    VarianceConvergenceReport report;
    report.c1 = truth.c1;
    report.c2 = truth.c2;
    report.r_true = truth.r;
    report.g2_true = truth.g2;
    const double kernel_ratio = truth.c2 / (truth.c1 * truth.c1);
    report.sigma1_sq = kernel_ratio * truth.g2;
    report.sigma2_sq = std::max(0.0, kernel_ratio * (truth.g2 - truth.r * truth.r));

    for (std::size_t b = 0; b < cfg.n_schedule.size(); ++b) {
        const std::size_t n = cfg.n_schedule[b];
        VarianceBlock block;
        block.n = n;
        block.h = cfg.bandwidth.resolve(n, oracle);
        const auto moments = oracle.kernel_moments(cfg.kernel, block.h);
        if (!(moments.e_delta > 0.0)) {
            throw ExperimentError("oracle finds no mass within bandwidth " + format_double(block.h));
        }
        block.phi_h = oracle.small_ball(block.h);
        block.e_delta = moments.e_delta;
        const auto est = estimator_of(cfg, block.h);

        block.g_n.resize(cfg.replicates);
        block.f_n.resize(cfg.replicates);
        block.centered.resize(cfg.replicates);
        std::vector<char> empty(cfg.replicates, 0);
        parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
            const auto sample = draw_sample(cfg, n, replicate_seed(cfg.seed, b, r));
            const auto s = kernel_sums(sample, cfg.x.coeffs(), est);
            const double scale = static_cast<double>(n) * block.e_delta;
            block.g_n[r] = s.sum_wphi / scale;
            block.f_n[r] = s.sum_w / scale;
            block.centered[r] = block.g_n[r] - truth.r * block.f_n[r];
            empty[r] = s.neighbors == 0;
        });
        for (char e : empty) block.no_neighbors += e ? 1 : 0;
        check_failures(block.no_neighbors, cfg.replicates, n, "NoNeighbors");

        const double scale = static_cast<double>(n) * block.phi_h;
        block.scaled_var_g = scale * sample_variance(block.g_n);
        block.scaled_var_centered = scale * sample_variance(block.centered);
        const std::uint64_t boot_seed = derive_seed(cfg.seed, streams::bootstrap, b);
        if (report.sigma1_sq > 0.0) {
            block.sigma1 = bootstrap_ratio(block.g_n, scale, report.sigma1_sq, cfg.bootstrap, boot_seed);
        }
        if (report.sigma2_sq > 0.0) {
            block.sigma2 =
                bootstrap_ratio(block.centered, scale, report.sigma2_sq, cfg.bootstrap, boot_seed);
        }
        report.blocks.push_back(std::move(block));
    }
    report.sigma1_toward_one = toward_one(report.blocks, &VarianceBlock::sigma1);
    report.sigma2_toward_one = toward_one(report.blocks, &VarianceBlock::sigma2);
    return report;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json opt_json(const std::optional<bool>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json ratio_json(const std::optional<RatioEstimate>& r) {
    if (!r) return nullptr;
    return {{"ratio", r->ratio}, {"ci_low", r->ci_low}, {"ci_high", r->ci_high}};
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

}  // namespace

nlohmann::json to_json(const NormalityReport& r, bool with_stats) {
    nlohmann::json j = {{"M", r.stats.size()},
                        {"mean", r.mean},
                        {"variance", r.variance},
                        {"skewness", r.skewness},
                        {"excess_kurtosis", r.excess_kurtosis},
                        {"ks_distance", r.ks_distance},
                        {"ks_threshold", r.ks_threshold},
                        {"ks_pass", r.ks_pass},
                        {"degenerate", r.degenerate}};
    if (with_stats) j["stats"] = r.stats;
    return j;
}

nlohmann::json to_json(const CltReport& report) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : report.blocks) {
        blocks.push_back({{"n", b.n},
                          {"h", b.h},
                          {"phi_h", b.phi_h},
                          {"e_delta", b.e_delta},
                          {"r_true", b.r_true},
                          {"sigma2_oracle", b.sigma2_oracle},
                          {"sigma2_limit", b.sigma2_limit},
                          {"no_neighbors", b.no_neighbors},
                          {"plugin_degenerate", b.plugin_degenerate},
                          {"oracle", to_json(b.oracle, false)},
                          {"plugin", b.plugin ? to_json(*b.plugin, false) : nlohmann::json(nullptr)}});
    }
    return {{"experiment", "clt"},
            {"self_test", report.self_test},
            {"normalization", to_string(report.normalization)},
            {"c1", report.c1},
            {"c2", report.c2},
            {"blocks", std::move(blocks)}};
}

nlohmann::json to_json(const VarianceConvergenceReport& report) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : report.blocks) {
        blocks.push_back({{"n", b.n},
                          {"h", b.h},
                          {"phi_h", b.phi_h},
                          {"e_delta", b.e_delta},
                          {"no_neighbors", b.no_neighbors},
                          {"scaled_var_g", b.scaled_var_g},
                          {"scaled_var_centered", b.scaled_var_centered},
                          {"sigma1", ratio_json(b.sigma1)},
                          {"sigma2", ratio_json(b.sigma2)}});
    }
    return {{"experiment", "variance"},
            {"c1", report.c1},
            {"c2", report.c2},
            {"r_true", report.r_true},
            {"g2_true", report.g2_true},
            {"sigma1_sq", report.sigma1_sq},
            {"sigma2_sq", report.sigma2_sq},
            {"sigma1_toward_one", opt_json(report.sigma1_toward_one)},
            {"sigma2_toward_one", opt_json(report.sigma2_toward_one)},
            {"blocks", std::move(blocks)}};
}

std::vector<std::string> write_clt_outputs(const std::string& dir, const CltReport& report) {
    ensure_dir(dir);
    const std::filesystem::path root(dir);
    {
        const auto path = root / "stats.csv";
        auto out = open_output(path);
        out << "replicate,n,h,r_hat,statistic_oracle,statistic_plugin\n";
        for (const auto& b : report.blocks) {
            for (const auto& row : b.rows) {
                out << row.replicate << ',' << b.n << ',' << format_double(b.h) << ','
                    << cell(row.r_hat) << ',' << cell(row.stat_oracle) << ','
                    << cell(row.stat_plugin) << '\n';
            }
        }
        finish(out, path);
    }
    {
        const auto path = root / "qq.csv";
        auto out = open_output(path);
        out << "theoretical,empirical\n";
        for (const auto& [t, e] : report.primary().qq) {
            out << format_double(t) << ',' << format_double(e) << '\n';
        }
        finish(out, path);
    }
    write_json(root / "report.json", to_json(report));
    return {"stats.csv", "qq.csv", "report.json"};
}

std::vector<std::string> write_variance_outputs(const std::string& dir,
                                                const VarianceConvergenceReport& report) {
    ensure_dir(dir);
    const std::filesystem::path root(dir);
    {
        const auto path = root / "stats.csv";
        auto out = open_output(path);
        out << "replicate,n,h,g_n,f_n,centered\n";
        for (const auto& b : report.blocks) {
            for (std::size_t r = 0; r < b.g_n.size(); ++r) {
                out << r << ',' << b.n << ',' << format_double(b.h) << ',' << format_double(b.g_n[r])
                    << ',' << format_double(b.f_n[r]) << ',' << format_double(b.centered[r]) << '\n';
            }
        }
        finish(out, path);
    }
    write_json(root / "report.json", to_json(report));
    return {"stats.csv", "report.json"};
}

}  // namespace hilreg

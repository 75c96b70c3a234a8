#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hilreg/asymptotics.hpp"
#include "hilreg/errors.hpp"
#include "hilreg/montecarlo.hpp"
#include "hilreg/process.hpp"

namespace hilreg {

/// Invalid configuration: malformed JSON or a bad field. The message names the
/// line (for syntax errors) or the dotted field path.
class ConfigError : public UsageError {
public:
    using UsageError::UsageError;
};

/// A parsed configuration document together with where it came from.
struct ConfigDocument {
    nlohmann::json root;
    std::string path;
    /// Set when the document was a run manifest; names its subcommand.
    std::optional<std::string> manifest_subcommand;
    std::optional<std::uint64_t> manifest_seed;
};

/// Reads a JSON config file. A run manifest is accepted too: its config echo
/// and seed are used. Throws IoError or ConfigError.
ConfigDocument load_config(const std::string& path);
ConfigDocument parse_config_text(const std::string& text, const std::string& origin);

LinearProcessModel parse_model(const nlohmann::json& root);
RegressionModel parse_regression(const nlohmann::json& root);

struct SimulateConfig {
    std::size_t n;
};
SimulateConfig parse_simulate(const nlohmann::json& root);

struct EstimateConfig {
    std::string sample_path;
    std::vector<HilbertVector> queries;
    EstimatorConfig estimator;
    std::vector<double> h_grid;            // non-empty: select h by cross-validation
    std::vector<std::size_t> cv_indices;   // held-out indices (empty = all)
    bool oracle_norm = false;              // false: self-normalized
    std::optional<double> norm;            // explicit E Delta_1(x)
    std::size_t oracle_draws = 1'000'000;
};
EstimateConfig parse_estimate(const nlohmann::json& root);

/// Experiment block shared by the clt and variance subcommands (seed and
/// threads are filled in by the caller).
ExperimentConfig parse_experiment(const nlohmann::json& root);

struct QaCheckConfig {
    std::vector<std::size_t> index_i;
    std::vector<std::size_t> index_j;
    std::size_t probes;
    std::size_t mc_samples;
};
QaCheckConfig parse_qa_check(const nlohmann::json& root);

struct RatesConfig {
    RateParams params;
    std::vector<RatePoint> schedule;
};
RatesConfig parse_rates(const nlohmann::json& root);

}  // namespace hilreg

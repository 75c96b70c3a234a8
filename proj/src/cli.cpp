#include "hilreg/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hilreg/asymptotics.hpp"
#include "hilreg/config.hpp"
#include "hilreg/dependence.hpp"
#include "hilreg/errors.hpp"
#include "hilreg/estimator.hpp"
#include "hilreg/format.hpp"
#include "hilreg/montecarlo.hpp"
#include "hilreg/oracle.hpp"
#include "hilreg/parallel.hpp"
#include "hilreg/process.hpp"

namespace hilreg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunContext {
    std::string subcommand;
    ConfigDocument doc;
    json echo;  // resolved config: the input with the effective seed filled in
    fs::path out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::ostream* out = nullptr;
};

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_json_file(const fs::path& path, const json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    close_output(out, path);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

// ---------------------------------------------------------------------------

std::vector<std::string> cmd_simulate(const RunContext& ctx) {
    const auto model = parse_model(ctx.doc.root);
    const auto reg = parse_regression(ctx.doc.root);
    const auto sim = parse_simulate(ctx.doc.root);
    const auto sample = simulate(model, reg, sim.n, ctx.seed);
    write_sample_csv((ctx.out_dir / "sample.csv").string(), sample);
    *ctx.out << "simulated n=" << sample.size() << " d=" << sample.dim() << '\n';
    return {"sample.csv"};
}

std::vector<std::string> cmd_estimate(const RunContext& ctx) {
    auto cfg = parse_estimate(ctx.doc.root);
    const auto sample = read_sample_csv(cfg.sample_path);
    std::vector<std::string> files;

    if (!cfg.h_grid.empty()) {
        const auto cv = cross_validate_bandwidth(sample, cfg.cv_indices, cfg.h_grid, cfg.estimator);
        cfg.estimator.h = cv.h;
        json loss = json::array();
        for (double l : cv.loss) loss.push_back(std::isfinite(l) ? json(l) : json(nullptr));
        write_json_file(ctx.out_dir / "cv.json", {{"h", cv.h},
                                                  {"h_grid", cv.h_grid},
                                                  {"loss", loss},
                                                  {"evaluated", cv.evaluated},
                                                  {"skipped", cv.skipped}});
        files.push_back("cv.json");
    }

    std::optional<LinearProcessModel> model;
    RegressionModel reg;
    if (cfg.oracle_norm && !cfg.norm) {
        model = parse_model(ctx.doc.root);
        reg = parse_regression(ctx.doc.root);
    }

    const auto path = ctx.out_dir / "estimates.csv";
    auto out = open_output(path);
    out << "x_id,h,n_neighbors,r_hat,g_n,f_n,mode,status\n";
    const std::string mode = cfg.oracle_norm ? "oracle" : "empirical";
    std::size_t missing = 0;
    for (std::size_t q = 0; q < cfg.queries.size(); ++q) {
        const auto& x = cfg.queries[q];
        if (x.dim() != sample.dim()) {
            throw ConfigError("config field 'estimate.queries[" + std::to_string(q) +
                              "]': dimension differs from the sample");
        }
        const auto s = kernel_sums(sample, x.coeffs(), cfg.estimator);
        out << q << ',' << format_double(cfg.estimator.h) << ',' << s.neighbors << ',';
        if (s.neighbors == 0) {
            out << "NA,NA,NA," << mode << ",NoNeighbors\n";
            ++missing;
            continue;
        }
        double norm = s.sum_w / static_cast<double>(s.n);
        if (cfg.oracle_norm) {
            if (cfg.norm) {
                norm = *cfg.norm;
            } else {
                const ModelOracle oracle(*model, reg, x, cfg.estimator.transform, cfg.oracle_draws,
                                         derive_seed(ctx.seed, streams::oracle, q));
                norm = oracle.kernel_moments(cfg.estimator.kernel, cfg.estimator.h).e_delta;
                if (!(norm > 0.0)) {
                    throw ExperimentError("oracle E Delta is zero at query " + std::to_string(q));
                }
            }
        }
        const double r_hat = std::clamp(s.sum_wphi / s.sum_w, s.min_phi, s.max_phi);
        const double scale = static_cast<double>(s.n) * norm;
        out << format_double(r_hat) << ',' << format_double(s.sum_wphi / scale) << ','
            << format_double(s.sum_w / scale) << ',' << mode << ",ok\n";
    }
    close_output(out, path);
    files.push_back("estimates.csv");
    *ctx.out << "estimated " << cfg.queries.size() << " queries (" << missing
             << " without neighbors) at h=" << format_double(cfg.estimator.h) << '\n';
    return files;
}

ExperimentConfig experiment_of(const RunContext& ctx) {
    auto cfg = parse_experiment(ctx.doc.root);
    cfg.seed = ctx.seed;
    cfg.threads = ctx.threads;
    return cfg;
}

std::vector<std::string> cmd_clt(const RunContext& ctx) {
    const auto report = run_clt_experiment(experiment_of(ctx));
    const auto files = write_clt_outputs(ctx.out_dir.string(), report);
    const auto& p = report.primary();
    *ctx.out << "ks_distance=" << format_double(p.ks_distance)
             << " threshold=" << format_double(p.ks_threshold) << " mean=" << format_double(p.mean)
             << " variance=" << format_double(p.variance) << (p.degenerate ? " degenerate" : "")
             << '\n';
    return files;
}

std::vector<std::string> cmd_variance(const RunContext& ctx) {
    const auto report = run_variance_experiment(experiment_of(ctx));
    const auto files = write_variance_outputs(ctx.out_dir.string(), report);
    for (const auto& b : report.blocks) {
        *ctx.out << "n=" << b.n << " h=" << format_double(b.h);
        if (b.sigma1) *ctx.out << " ratio1=" << format_double(b.sigma1->ratio);
        if (b.sigma2) *ctx.out << " ratio2=" << format_double(b.sigma2->ratio);
        *ctx.out << '\n';
    }
    return files;
}

std::vector<std::string> cmd_qa_check(const RunContext& ctx) {
    const auto model = parse_model(ctx.doc.root);
    const auto reg = parse_regression(ctx.doc.root);
    const auto qa = parse_qa_check(ctx.doc.root);
    const auto report = qa_inequality_check(model, reg, qa.index_i, qa.index_j, qa.probes,
                                            qa.mc_samples, ctx.seed, ctx.threads);
    std::size_t max_lag = 0;
    for (std::size_t i : qa.index_i)
        for (std::size_t j : qa.index_j) max_lag = std::max(max_lag, i > j ? i - j : j - i);
    json j = to_json(report);
    j["lambda"] = to_json(theoretical_lambda(model, reg, max_lag));
    write_json_file(ctx.out_dir / "report.json", j);
    *ctx.out << "violations=" << report.violations << '/' << report.probes
             << " worst_margin=" << format_double(report.worst_margin) << '\n';
    return {"report.json"};
}

std::vector<std::string> cmd_rates(const RunContext& ctx) {
    const auto cfg = parse_rates(ctx.doc.root);
    const auto report = check_rate_schedule(cfg.params, cfg.schedule);
    write_json_file(ctx.out_dir / "rates.json", to_json(report));
    const auto path = ctx.out_dir / "rates.csv";
    auto out = open_output(path);
    out << "n,h,phi_h,exponent_threshold,exponent_ok,dependence_term,mass_term,bias_term\n";
    for (const auto& p : report.points) {
        out << p.n << ',' << format_double(p.h) << ',' << format_double(p.phi_h) << ','
            << format_double(p.exponent_threshold) << ',' << (p.exponent_ok ? "true" : "false")
            << ',' << format_double(p.dependence_term) << ',' << format_double(p.mass_term) << ','
            << format_double(p.bias_term) << '\n';
    }
    close_output(out, path);
    auto flag = [](const std::optional<bool>& v) { return v ? (*v ? "pass" : "fail") : "n/a"; };
    *ctx.out << "exponent " << (report.exponent_ok ? "pass" : "fail") << ", dependence "
             << flag(report.dependence_ok) << ", mass " << flag(report.mass_ok) << ", bias "
             << flag(report.bias_ok) << '\n';
    return {"rates.json", "rates.csv"};
}

using Handler = std::function<std::vector<std::string>(const RunContext&)>;

const std::vector<std::pair<std::string, Handler>>& handlers() {
    static const std::vector<std::pair<std::string, Handler>> table{
        {"simulate", cmd_simulate}, {"estimate", cmd_estimate}, {"clt", cmd_clt},
        {"variance", cmd_variance}, {"qa-check", cmd_qa_check}, {"rates", cmd_rates}};
    return table;
}

void check_top_level(const json& root) {
    static const char* known[] = {"model",      "regression", "simulate", "estimate",
                                  "experiment", "qa_check",   "rates",    "seed"};
    for (auto it = root.begin(); it != root.end(); ++it) {
        if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) {
            throw ConfigError("unknown config field '" + it.key() + "'");
        }
    }
}

int execute(const std::string& subcommand, const Handler& handler, const std::string& config_path,
            const std::string& out_dir, bool seed_given, std::uint64_t seed, unsigned threads,
            std::ostream& out) {
    RunContext ctx;
    ctx.subcommand = subcommand;
    ctx.doc = load_config(config_path);
    if (ctx.doc.manifest_subcommand && *ctx.doc.manifest_subcommand != subcommand) {
        throw ConfigError("manifest '" + config_path + "' records subcommand '" +
                          *ctx.doc.manifest_subcommand + "', not '" + subcommand + "'");
    }
    check_top_level(ctx.doc.root);
    if (seed_given) {
        ctx.seed = seed;
    } else if (auto it = ctx.doc.root.find("seed"); it != ctx.doc.root.end()) {
        if (!it->is_number_unsigned()) throw ConfigError("config field 'seed': expected a nonnegative integer");
        ctx.seed = it->get<std::uint64_t>();
    }
    ctx.echo = ctx.doc.root;
    ctx.echo["seed"] = ctx.seed;
    ctx.out_dir = out_dir;
    ctx.threads = threads;
    ctx.out = &out;
    ensure_dir(ctx.out_dir);

    const std::string started = utc_now();
    const auto files = handler(ctx);
    for (const auto& f : files) {
        if (!fs::exists(ctx.out_dir / f)) throw IoError("declared output '" + f + "' is missing");
    }
    json manifest = {{"manifest_version", 1},
                     {"tool", "hilreg"},
                     {"version", kVersion},
                     {"subcommand", subcommand},
                     {"config_path", config_path},
                     {"config", ctx.echo},
                     {"seed", ctx.seed},
                     {"started", started},
                     {"finished", utc_now()},
                     {"outputs", files}};
    write_json_file(ctx.out_dir / "manifest.json", manifest);
    return exit_code::ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Kernel regression for Hilbert-valued covariates under quasi-association"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    unsigned threads = default_threads();
    std::vector<std::pair<CLI::App*, CLI::Option*>> seed_options;
    for (const auto& [name, handler] : handlers()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "Experiment config (JSON) or a run manifest")
            ->required();
        sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
        auto* seed_opt = sub->add_option("--seed", seed, "Master seed (overrides the config)");
        sub->add_option("--threads", threads, "Worker threads")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        seed_options.emplace_back(sub, seed_opt);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "hilreg: " << e.what() << '\n';
        return exit_code::config;
    }

    for (std::size_t k = 0; k < seed_options.size(); ++k) {
        auto [sub, seed_opt] = seed_options[k];
        if (!sub->parsed()) continue;
        const auto& [name, handler] = handlers()[k];
        const bool seed_given = seed_opt->count() > 0;
        try {
            return execute(name, handler, config_path, out_dir, seed_given, seed, threads, out);
        } catch (const UsageError& e) {
            err << "hilreg " << name << ": config error: " << e.what() << '\n';
            return exit_code::config;
        } catch (const json::exception& e) {
            err << "hilreg " << name << ": config error: " << e.what() << '\n';
            return exit_code::config;
        } catch (const IoError& e) {
            err << "hilreg " << name << ": I/O error: " << e.what() << '\n';
            return exit_code::io;
        } catch (const fs::filesystem_error& e) {
            err << "hilreg " << name << ": I/O error: " << e.what() << '\n';
            return exit_code::io;
        } catch (const std::exception& e) {
            err << "hilreg " << name << ": experiment error: " << e.what() << '\n';
            return exit_code::experiment;
        }
    }
    return exit_code::config;
}

}  // namespace hilreg

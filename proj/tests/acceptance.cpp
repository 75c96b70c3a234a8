// Acceptance gate: one PASS/FAIL line per criterion. Experiments run through
// the command-line front end so that criterion 9 can replay their manifests.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hilreg/asymptotics.hpp"
#include "hilreg/cli.hpp"
#include "hilreg/errors.hpp"
#include "hilreg/estimator.hpp"
#include "hilreg/montecarlo.hpp"
#include "hilreg/rng.hpp"

using namespace hilreg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = HILREG_CONFIG_DIR;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// An experiment run through the CLI, remembered for the replay check.
struct CliRun {
    std::string subcommand;
    fs::path out_dir;
};

class Workspace {
public:
    Workspace() : root_(fs::temp_directory_path() / "hilreg_acceptance") {
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    ~Workspace() { fs::remove_all(root_); }

    json run(const std::string& subcommand, const fs::path& config, const std::string& report) {
        const fs::path path = config.is_absolute() ? config : kConfigs / config;
        const fs::path out = root_ / config.stem();
        std::ostringstream o, e;
        const int code = run_cli({subcommand, "--config", path.string(), "--out", out.string()}, o, e);
        if (code != 0) throw std::runtime_error(subcommand + " exited with " + std::to_string(code) + ": " + e.str());
        runs_.push_back({subcommand, out});
        if (!fs::exists(out / report)) throw std::runtime_error(subcommand + " did not write " + report);
        return report.ends_with(".json") ? json::parse(slurp(out / report)) : json();
    }

    const std::vector<CliRun>& runs() const { return runs_; }
    const fs::path& root() const { return root_; }

private:
    fs::path root_;
    std::vector<CliRun> runs_;
};

Outcome box_kernel_oracle() {
    Rng rng(derive_seed(2024, streams::self_test, 1));
    std::uniform_int_distribution<std::size_t> nd(1, 50), dd(1, 5);
    std::uniform_real_distribution<double> u(-1.0, 1.0), hd(0.2, 2.5);
    double worst = 0.0;
    std::size_t evaluated = 0;
    std::size_t instance = 0;
    while (evaluated < 100) {
        ++instance;
        const std::size_t n = nd(rng), d = dd(rng);
        std::vector<double> c(n * d), y(n);
        for (double& v : c) v = u(rng);
        for (double& v : y) v = 3.0 * u(rng);
        const FunctionalSample s(d, c, y);
        std::vector<double> xc(d);
        for (double& v : xc) v = u(rng);
        const HilbertVector x(xc);
        EstimatorConfig cfg;
        cfg.h = hd(rng);
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (distance(s.x(i), x.coeffs()) <= cfg.h) {
                sum += y[i];
                ++count;
            }
        }
        if (count == 0) continue;
        ++evaluated;
        worst = std::max(worst, std::abs(regression_estimate(s, x, cfg) - sum / static_cast<double>(count)));
    }
    return {worst <= 1e-12, "max |diff| " + num(worst) + " over 100 instances (" + std::to_string(instance) + " drawn)"};
}

Outcome cj_constants() {
    double worst = 0.0;
    for (double b : {1.0, 2.0, 3.0}) {
        for (int j : {1, 2}) {
            worst = std::max(worst, std::abs(compute_cj(KernelSpec::box(), SmallBallFunction::power(b), j) - 1.0));
        }
    }
    const auto lin = SmallBallFunction::power(1.0);
    worst = std::max(worst, std::abs(compute_cj(KernelSpec::slope(), lin, 1) - 1.5));
    worst = std::max(worst, std::abs(compute_cj(KernelSpec::slope(), lin, 2) - 7.0 / 3.0));
    return {worst <= 1e-6, "max deviation " + num(worst)};
}

Outcome qa_inequality(Workspace& ws) {
    const json r = ws.run("qa-check", "accept_qa.json", "report.json");
    const double rate = r["violations"].get<double>() / r["probes"].get<double>();
    return {r["probes"] == 1000 && rate <= 0.01,
            std::to_string(r["violations"].get<int>()) + "/" + std::to_string(r["probes"].get<int>()) +
                " violations, lambda_sum " + num(r["lambda_sum"].get<double>())};
}

bool ratio_check(const json& report, const char* key, std::string& detail) {
    const auto& blocks = report["blocks"];
    const double first = blocks.front()[key]["ratio"].get<double>();
    const double last = blocks.back()[key]["ratio"].get<double>();
    detail += std::string(key) + " " + num(first) + " -> " + num(last) + "; ";
    return last >= 0.75 && last <= 1.25 && std::abs(last - 1.0) < std::abs(first - 1.0);
}

Outcome variance_limit(Workspace& ws) {
    const json centre = ws.run("variance", "accept_variance.json", "report.json");
    const json off = ws.run("variance", "accept_variance_offcenter.json", "report.json");
    std::string detail = "x=0: ";
    bool ok = ratio_check(centre, "sigma1", detail);
    ok = ratio_check(centre, "sigma2", detail) && ok;
    detail += "x1=0.5: ";
    ok = ratio_check(off, "sigma2", detail) && ok;
    return {ok, detail.substr(0, detail.size() - 2)};
}

Outcome clt(Workspace& ws, const std::string& config, double ks_max, bool moments) {
    const json r = ws.run("clt", config, "report.json");
    const auto& p = r["blocks"].back()["oracle"];
    const double ks = p["ks_distance"], mean = p["mean"], var = p["variance"];
    bool ok = ks < ks_max && !p["degenerate"].get<bool>();
    if (moments) ok = ok && std::abs(mean) < 0.15 && std::abs(var - 1.0) < 0.25;
    return {ok, "ks " + num(ks) + ", mean " + num(mean) + ", variance " + num(var) + ", n*phi(h) " +
                    num(r["blocks"].back()["n"].get<double>() * r["blocks"].back()["phi_h"].get<double>())};
}

Outcome rate_table() {
    struct Row {
        double a, b, delta, threshold;
        bool expected;
    };
    // Thresholds (2 + b) / (delta b) worked by hand; exact in binary.
    const Row table[] = {
        {10.0, 1.0, 0.5, 6.0, true},      {5.0, 1.0, 0.5, 6.0, false},
        {6.0, 1.0, 0.5, 6.0, false},      {6.0000001, 1.0, 0.5, 6.0, true},
        {4.0, 2.0, 0.5, 4.0, false},      {4.01, 2.0, 0.5, 4.0, true},
        {6.0, 4.0, 0.25, 6.0, false},     {2.5, 4.0, 0.75, 2.0, true},
    };
    int matches = 0;
    for (const auto& row : table) {
        RateParams p;
        p.a = row.a;
        p.b = row.b;
        p.delta = row.delta;
        const auto r = check_rate_conditions(p, 1000, 0.1, std::pow(0.1, row.b));
        if (r.exponent_ok == row.expected && r.exponent_threshold == row.threshold) ++matches;
    }
    return {matches == 8, std::to_string(matches) + "/8 rows match"};
}

bool self_test_passes(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.self_test = true;
    cfg.replicates = 1000;
    cfg.seed = seed;
    return run_clt_experiment(cfg).primary().ks_pass;
}

Outcome self_test_calibration() {
    int passes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) passes += self_test_passes(seed) ? 1 : 0;
    // Diagnostic only: the rejection rate over a longer seed range.
    int rejected = 0;
    for (std::uint64_t seed = 0; seed < 5000; ++seed) rejected += self_test_passes(seed) ? 0 : 1;
    return {passes >= 99, std::to_string(passes) + "/100 master seeds pass; rejection rate over seeds 0..4999 " +
                              num(rejected / 50.0) + "%"};
}

// The smaller subcommands, run only so that their outputs are replayed too.
void run_remaining_subcommands(Workspace& ws) {
    ws.run("simulate", "simulate.json", "sample.csv");
    json est = json::parse(slurp(kConfigs / "estimate.json"));
    est["estimate"]["sample"] = (ws.root() / "simulate" / "sample.csv").string();
    const fs::path est_path = ws.root() / "estimate_config.json";
    std::ofstream(est_path) << est.dump(2);
    ws.run("estimate", est_path, "estimates.csv");
    ws.run("rates", "rates.json", "rates.json");
    ws.run("clt", "self_test.json", "report.json");
}

Outcome determinism(Workspace& ws) {
    run_remaining_subcommands(ws);
    std::size_t compared = 0;
    std::vector<std::string> mismatches;
    int k = 0;
    for (const auto& run : ws.runs()) {
        const fs::path replay = ws.root() / ("replay_" + std::to_string(k++));
        std::ostringstream o, e;
        const int code = run_cli({run.subcommand, "--config", (run.out_dir / "manifest.json").string(),
                                  "--out", replay.string()}, o, e);
        if (code != 0) {
            mismatches.push_back(run.out_dir.filename().string() + " (exit " + std::to_string(code) + ")");
            continue;
        }
        const json m1 = json::parse(slurp(run.out_dir / "manifest.json"));
        const json m2 = json::parse(slurp(replay / "manifest.json"));
        if (m1["config"] != m2["config"] || m1["seed"] != m2["seed"] || m1["outputs"] != m2["outputs"]) {
            mismatches.push_back(run.out_dir.filename().string() + "/manifest.json");
        }
        for (const auto& f : m1["outputs"]) {
            const std::string name = f.get<std::string>();
            ++compared;
            if (slurp(run.out_dir / name) != slurp(replay / name)) {
                mismatches.push_back(run.out_dir.filename().string() + "/" + name);
            }
        }
    }
    std::string detail = std::to_string(compared) + " files from " + std::to_string(ws.runs().size()) +
                         " experiments compared";
    for (const auto& m : mismatches) detail += "; differs: " + m;
    return {mismatches.empty() && compared > 0, detail};
}

}  // namespace

int main() {
    Workspace ws;
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria{
        {1, "box-kernel oracle equivalence", 1.0, box_kernel_oracle},
        {2, "C_j constants", 1.0, cj_constants},
        {3, "quasi-association inequality", 300.0, [&] { return qa_inequality(ws); }},
        {4, "variance limit", 600.0, [&] { return variance_limit(ws); }},
        {5, "CLT, independent design", 600.0, [&] { return clt(ws, "accept_clt_iid.json", 0.09, true); }},
        {6, "CLT, MA(5) design", 900.0, [&] { return clt(ws, "accept_clt_ma5.json", 0.10, false); }},
        {7, "rate checker truth table", 1.0, rate_table},
        {8, "KS self-test calibration", 60.0, self_test_calibration},
        {9, "manifest replay determinism", 1e9, [&] { return determinism(ws); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.budget_s) {
            o.pass = false;
            o.detail += "; over the " + num(c.budget_s) + " s budget";
        }
        failures += o.pass ? 0 : 1;
        std::cout << "criterion " << c.id << " " << c.name << ": " << (o.pass ? "PASS" : "FAIL") << " ("
                  << o.detail << "; " << num(secs) << " s)" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "hilreg/cli.hpp"
#include "hilreg/estimator.hpp"
#include "hilreg/format.hpp"
#include "hilreg/hilbert.hpp"

using namespace hilreg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class Scratch {
public:
    explicit Scratch(const std::string& name) : root_(fs::temp_directory_path() / ("hilreg_cli_" + name)) {
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    ~Scratch() { fs::remove_all(root_); }
    fs::path operator/(const std::string& p) const { return root_ / p; }
    std::string write_text(const std::string& name, const std::string& text) const {
        std::ofstream(root_ / name, std::ios::binary) << text;
        return (root_ / name).string();
    }
    std::string write(const std::string& name, const json& j) const { return write_text(name, j.dump(2)); }

private:
    fs::path root_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

json simulate_config(std::size_t n) {
    return {{"model", {{"kind", "iid"}, {"dim", 2}}},
            {"regression", {{"function", "sin_first"}, {"noise_sd", 0.5}}},
            {"simulate", {{"n", n}}}};
}

}  // namespace

TEST_CASE("simulate writes the requested sample", "[cli]") {
    Scratch dir("simulate");
    const auto cfg = dir.write("sim.json", simulate_config(10));
    const auto a = run({"simulate", "--config", cfg, "--out", (dir / "a").string(), "--seed", "5"});
    REQUIRE(a.code == 0);
    const auto rows = csv_rows(dir / "a" / "sample.csv");
    REQUIRE(rows.size() == 11);
    CHECK(rows[0] == std::vector<std::string>{"y", "x1", "x2"});
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].size() == 3);

    const auto b = run({"simulate", "--config", cfg, "--out", (dir / "b").string(), "--seed", "5"});
    REQUIRE(b.code == 0);
    CHECK(slurp(dir / "a" / "sample.csv") == slurp(dir / "b" / "sample.csv"));

    const auto manifest = json::parse(slurp(dir / "a" / "manifest.json"));
    CHECK(manifest["subcommand"] == "simulate");
    CHECK(manifest["seed"] == 5);
    CHECK(manifest["config"]["seed"] == 5);
    CHECK(manifest["outputs"] == json::array({"sample.csv"}));
    CHECK(manifest["version"] == kVersion);
}

TEST_CASE("simulated MA(1) sample carries the model covariance", "[cli]") {
    Scratch dir("ma1");
    json cfg = {{"model", {{"weights", json::array({1.0, 0.6})}}}, {"simulate", {{"n", 40000}}}, {"seed", 3}};
    const auto path = dir.write("ma.json", cfg);
    REQUIRE(run({"simulate", "--config", path, "--out", (dir / "o").string()}).code == 0);
    const auto s = read_sample_csv((dir / "o" / "sample.csv").string());
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) c += s.x(i)[0] * s.x(i + 1)[0];
    c /= static_cast<double>(s.size() - 1);
    // Var(X_i X_{i+1}) <= 1.36^2 + 0.6^2 under this model; 4 standard errors.
    CHECK(std::abs(c - 0.6) < 4.0 * std::sqrt(2.2 / 40000.0));
}

TEST_CASE("estimate handles exact hits, empty windows and library agreement", "[cli]") {
    Scratch dir("estimate");
    dir.write_text("one.csv", "y,x1,x2\n2.5,0.1,0.2\n");
    json cfg = {{"estimate",
                 {{"sample", (dir / "one.csv").string()},
                  {"queries", json::array({json::array({0.1, 0.2}), json::array({9.0, 9.0})})},
                  {"h", 0.5},
                  {"transform", {{"clip", 1.0}}}}}};
    const auto r = run({"estimate", "--config", dir.write("e.json", cfg), "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(dir / "o" / "estimates.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"x_id", "h", "n_neighbors", "r_hat", "g_n", "f_n", "mode", "status"});
    CHECK(rows[1][3] == "1");
    CHECK(rows[1][7] == "ok");
    CHECK(rows[2][2] == "0");
    CHECK(rows[2][3] == "NA");
    CHECK(rows[2][7] == "NoNeighbors");

    REQUIRE(run({"simulate", "--config", dir.write("sim.json", simulate_config(100)), "--out",
                 (dir / "s").string(), "--seed", "8"})
                .code == 0);
    const auto sample_path = (dir / "s" / "sample.csv").string();
    json many = {{"estimate",
                  {{"sample", sample_path},
                   {"queries", json::array({json::array({0.0, 0.0}), json::array({0.5, -0.3})})},
                   {"h", 0.9},
                   {"kernel", "slope"}}}};
    REQUIRE(run({"estimate", "--config", dir.write("m.json", many), "--out", (dir / "m").string()}).code == 0);
    const auto got = csv_rows(dir / "m" / "estimates.csv");
    const auto sample = read_sample_csv(sample_path);
    EstimatorConfig ec;
    ec.h = 0.9;
    ec.kernel = KernelSpec::slope();
    CHECK(got[1][3] == format_double(regression_estimate(sample, HilbertVector{0.0, 0.0}, ec)));
    CHECK(got[2][3] == format_double(regression_estimate(sample, HilbertVector{0.5, -0.3}, ec)));
    const auto nd = numerator_denominator(sample, HilbertVector{0.0, 0.0}, ec,
                                          self_normalization(sample, HilbertVector{0.0, 0.0}, ec));
    CHECK(got[1][4] == format_double(nd.g_n));
    CHECK(got[1][6] == "empirical");
}

TEST_CASE("estimate selects h by cross-validation when given a grid", "[cli]") {
    Scratch dir("cv");
    REQUIRE(run({"simulate", "--config", dir.write("sim.json", simulate_config(60)), "--out",
                 (dir / "s").string()})
                .code == 0);
    json cfg = {{"estimate",
                 {{"sample", (dir / "s" / "sample.csv").string()},
                  {"queries", json::array({json::array({0.0, 0.0})})},
                  {"h_grid", json::array({0.05, 0.5, 1.0})}}}};
    REQUIRE(run({"estimate", "--config", dir.write("e.json", cfg), "--out", (dir / "o").string()}).code == 0);
    const auto cv = json::parse(slurp(dir / "o" / "cv.json"));
    const auto rows = csv_rows(dir / "o" / "estimates.csv");
    CHECK(rows[1][1] == format_double(cv["h"].get<double>()));
    const auto manifest = json::parse(slurp(dir / "o" / "manifest.json"));
    CHECK(manifest["outputs"] == json::array({"cv.json", "estimates.csv"}));
}

TEST_CASE("experiment subcommands produce their reports", "[cli]") {
    Scratch dir("experiments");
    json self = {{"model", {{"kind", "iid"}, {"dim", 1}}},
                 {"experiment",
                  {{"n_schedule", {100}},
                   {"bandwidth", {{"rule", "fixed"}, {"h", 1.0}}},
                   {"replicates", 1000},
                   {"self_test", true}}}};
    const auto clt = run({"clt", "--config", dir.write("self.json", self), "--out", (dir / "clt").string(), "--seed", "4"});
    REQUIRE(clt.code == 0);
    const auto report = json::parse(slurp(dir / "clt" / "report.json"));
    CHECK(report["self_test"] == true);
    CHECK(report["blocks"][0]["oracle"]["ks_pass"] == true);
    CHECK(fs::exists(dir / "clt" / "qq.csv"));

    json smoke = {{"model", {{"kind", "iid"}, {"dim", 1}}},
                  {"regression", {{"function", "sin_first"}, {"noise_sd", 0.5}}},
                  {"experiment",
                   {{"n_schedule", {200}},
                    {"bandwidth", {{"rule", "small_ball_target"}, {"target", 40}}},
                    {"replicates", 2},
                    {"oracle_draws", 10000},
                    {"bootstrap", 20}}}};
    const auto var = run({"variance", "--config", dir.write("smoke.json", smoke), "--out", (dir / "var").string()});
    REQUIRE(var.code == 0);
    const auto vr = json::parse(slurp(dir / "var" / "report.json"));
    const auto& s1 = vr["blocks"][0]["sigma1"];
    CHECK(s1["ci_low"].get<double>() <= s1["ratio"].get<double>());
    CHECK(s1["ci_high"].get<double>() >= s1["ratio"].get<double>());

    json qa = {{"model", {{"kind", "iid"}, {"dim", 2}}},
               {"regression", {{"noise_sd", 1.0}}},
               {"qa_check", {{"I", {1, 2}}, {"J", {4}}, {"probes", 10}, {"mc_samples", 2000}}}};
    REQUIRE(run({"qa-check", "--config", dir.write("qa.json", qa), "--out", (dir / "qa").string()}).code == 0);
    const auto qr = json::parse(slurp(dir / "qa" / "report.json"));
    CHECK(qr["violations"] == 0);
    CHECK(qr["lambda_sum"] == 0.0);

    json rates = {{"rates",
                   {{"a", 10.0}, {"b", 1.0}, {"delta", 0.4},
                    {"n_schedule", {1000, 10000, 100000}},
                    {"bandwidth", {{"rule", "power"}, {"c", 1.0}, {"kappa", 0.2}}},
                    {"small_ball", {{"kind", "power"}, {"b", 1.0}}}}}};
    REQUIRE(run({"rates", "--config", dir.write("rates.json", rates), "--out", (dir / "rates").string()}).code == 0);
    const auto rr = json::parse(slurp(dir / "rates" / "rates.json"));
    CHECK(rr["mass_ok"] == true);
    CHECK(csv_rows(dir / "rates" / "rates.csv").size() == 4);
}

TEST_CASE("a manifest reproduces its run", "[cli]") {
    Scratch dir("replay");
    json cfg = {{"model", {{"kind", "geometric"}, {"dim", 2}, {"order", 1}, {"rho", 0.5}}},
                {"regression", {{"function", "sin_first"}, {"noise_sd", 0.5}}},
                {"experiment",
                 {{"query", {0.1, 0.0}},
                  {"n_schedule", {300}},
                  {"bandwidth", {{"rule", "power"}, {"c", 2.0}, {"kappa", 0.1}}},
                  {"replicates", 20},
                  {"oracle_draws", 20000}}},
                {"seed", 17}};
    REQUIRE(run({"clt", "--config", dir.write("c.json", cfg), "--out", (dir / "a").string(), "--threads", "2"}).code == 0);
    const auto manifest = (dir / "a" / "manifest.json").string();
    REQUIRE(run({"clt", "--config", manifest, "--out", (dir / "b").string()}).code == 0);
    for (const char* f : {"stats.csv", "qq.csv", "report.json"}) {
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    const auto m2 = json::parse(slurp(dir / "b" / "manifest.json"));
    CHECK(m2["config"] == json::parse(slurp(manifest))["config"]);

    const auto wrong = run({"variance", "--config", manifest, "--out", (dir / "c").string()});
    CHECK(wrong.code == exit_code::config);
    CHECK(wrong.err.find("records subcommand 'clt'") != std::string::npos);
}

TEST_CASE("configuration errors exit with code 2", "[cli]") {
    Scratch dir("errors");
    const auto out = (dir / "o").string();

    const auto bad = run({"simulate", "--config", dir.write_text("bad.json", "{\n  \"simulate\": {\"n\": 3,}\n}\n"), "--out", out});
    CHECK(bad.code == exit_code::config);
    CHECK(bad.err.find("bad.json:2:") != std::string::npos);

    json unknown = simulate_config(5);
    unknown["simulate"]["m"] = 1;
    const auto u = run({"simulate", "--config", dir.write("u.json", unknown), "--out", out});
    CHECK(u.code == exit_code::config);
    CHECK(u.err.find("simulate.m") != std::string::npos);

    json neg = simulate_config(5);
    neg["regression"]["noise_sd"] = -1.0;
    const auto ng = run({"simulate", "--config", dir.write("neg.json", neg), "--out", out});
    CHECK(ng.code == exit_code::config);
    CHECK(ng.err.find("regression") != std::string::npos);

    dir.write_text("empty.csv", "y,x1\n");
    json est = {{"estimate", {{"sample", (dir / "empty.csv").string()}, {"queries", {{0.0}}}, {"h", 1.0}}}};
    CHECK(run({"estimate", "--config", dir.write("est.json", est), "--out", out}).code == exit_code::config);

    CHECK(run({"simulate", "--out", out}).code == exit_code::config);
    CHECK(run({"bogus", "--config", "x"}).code == exit_code::config);
    CHECK(run({"simulate", "--config", dir.write("t.json", simulate_config(5)), "--threads", "0"}).code ==
          exit_code::config);
    CHECK_FALSE(fs::exists(dir / "o" / "manifest.json"));
}

TEST_CASE("I/O and experiment failures map to their exit codes", "[cli]") {
    Scratch dir("io");
    CHECK(run({"simulate", "--config", (dir / "missing.json").string()}).code == exit_code::io);

    json est = {{"estimate", {{"sample", (dir / "nope.csv").string()}, {"queries", {{0.0}}}, {"h", 1.0}}}};
    CHECK(run({"estimate", "--config", dir.write("est.json", est), "--out", (dir / "o").string()}).code ==
          exit_code::io);

    dir.write_text("blocker", "not a directory");
    CHECK(run({"simulate", "--config", dir.write("s.json", simulate_config(3)), "--out",
               (dir / "blocker" / "sub").string()})
              .code == exit_code::io);

    json tiny = {{"model", {{"kind", "iid"}, {"dim", 3}}},
                 {"regression", {{"function", "sin_first"}, {"noise_sd", 0.5}}},
                 {"experiment",
                  {{"n_schedule", {200}},
                   {"bandwidth", {{"rule", "fixed"}, {"h", 0.001}}},
                   {"replicates", 10},
                   {"oracle_draws", 10000}}}};
    const auto e = run({"clt", "--config", dir.write("tiny.json", tiny), "--out", (dir / "t").string()});
    CHECK(e.code == exit_code::experiment);
    CHECK_FALSE(fs::exists(dir / "t" / "manifest.json"));
}

TEST_CASE("the installed binary reports exit codes to the shell", "[cli]") {
    Scratch dir("binary");
    const std::string bin = HILREG_CLI_PATH;
    auto status = [](const std::string& cmd) {
        const int raw = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    CHECK(status(bin + " --version") == 0);
    CHECK(status(bin + " simulate --config " + dir.write("s.json", simulate_config(4)) + " --out " +
                 (dir / "o").string()) == 0);
    CHECK(status(bin + " simulate --config " + (dir / "none.json").string()) == 4);
    CHECK(status(bin + " simulate") == 2);
}

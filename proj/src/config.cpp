#include "hilreg/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace hilreg {

using nlohmann::json;

namespace {

// A JSON node that remembers its dotted path for diagnostics.
class Field {
public:
    Field(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("config field '" + path_ + "': " + what);
    }

    const json& raw() const { return node_; }
    const std::string& path() const { return path_; }

    std::optional<Field> find(const std::string& key) const {
        require_object();
        auto it = node_.find(key);
        if (it == node_.end()) return std::nullopt;
        return Field(*it, child_path(key));
    }

    Field at(const std::string& key) const {
        auto f = find(key);
        if (!f) throw ConfigError("config field '" + child_path(key) + "' is required");
        return *f;
    }

    void only(std::initializer_list<const char*> keys) const {
        require_object();
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            bool known = false;
            for (const char* k : keys) known = known || it.key() == k;
            if (!known) throw ConfigError("unknown config field '" + child_path(it.key()) + "'");
        }
    }

    double number() const {
        if (!node_.is_number()) fail("expected a number");
        const double v = node_.get<double>();
        if (!std::isfinite(v)) fail("expected a finite number");
        return v;
    }

    std::uint64_t u64() const {
        if (!node_.is_number_integer() || (node_.is_number_integer() && !node_.is_number_unsigned() &&
                                           node_.get<std::int64_t>() < 0)) {
            fail("expected a nonnegative integer");
        }
        return node_.get<std::uint64_t>();
    }

    std::size_t count() const { return static_cast<std::size_t>(u64()); }

    std::string string() const {
        if (!node_.is_string()) fail("expected a string");
        return node_.get<std::string>();
    }

    bool boolean() const {
        if (!node_.is_boolean()) fail("expected true or false");
        return node_.get<bool>();
    }

    std::vector<Field> items() const {
        if (!node_.is_array()) fail("expected an array");
        std::vector<Field> out;
        for (std::size_t k = 0; k < node_.size(); ++k) {
            out.emplace_back(node_[k], path_ + "[" + std::to_string(k) + "]");
        }
        return out;
    }

    std::vector<double> numbers() const {
        std::vector<double> out;
        for (const auto& f : items()) out.push_back(f.number());
        return out;
    }

    std::vector<std::size_t> counts() const {
        std::vector<std::size_t> out;
        for (const auto& f : items()) out.push_back(f.count());
        return out;
    }

    bool is_object() const { return node_.is_object(); }
    bool is_string() const { return node_.is_string(); }
    bool is_number() const { return node_.is_number(); }

private:
    void require_object() const {
        if (!node_.is_object()) fail("expected an object");
    }
    std::string child_path(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const json& node_;
    std::string path_;
};

template <class T, class Fn>
T number_or(const Field& parent, const char* key, T fallback, Fn&& get) {
    auto f = parent.find(key);
    return f ? get(*f) : fallback;
}

double number_or(const Field& parent, const char* key, double fallback) {
    return number_or<double>(parent, key, fallback, [](const Field& f) { return f.number(); });
}

std::size_t count_or(const Field& parent, const char* key, std::size_t fallback) {
    return number_or<std::size_t>(parent, key, fallback, [](const Field& f) { return f.count(); });
}

// Wraps library validation failures so the message carries the field path.
template <class Fn>
auto checked(const Field& f, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const UsageError& e) {
        f.fail(e.what());
    }
}

Eigen::MatrixXd parse_matrix(const Field& f, std::optional<std::size_t> dim) {
    if (f.is_number()) {
        if (dim && *dim != 1) f.fail("a scalar weight needs dim = 1");
        return Eigen::MatrixXd::Constant(1, 1, f.number());
    }
    const auto rows = f.items();
    if (rows.empty()) f.fail("weight matrix is empty");
    const auto d = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        const auto vals = rows[static_cast<std::size_t>(r)].numbers();
        if (static_cast<Eigen::Index>(vals.size()) != d) f.fail("weight matrix must be square");
        for (Eigen::Index c = 0; c < d; ++c) m(r, c) = vals[static_cast<std::size_t>(c)];
    }
    if (dim && static_cast<std::size_t>(d) != *dim) f.fail("weight matrix size differs from dim");
    return m;
}

Transform parse_transform(const Field& f) {
    if (f.is_string()) return checked(f, [&] { return Transform::named(f.string()); });
    if (f.is_object()) {
        f.only({"clip"});
        const double c = f.at("clip").number();
        return checked(f, [&] { return Transform::clip(c); });
    }
    f.fail("expected a transform name or {\"clip\": c}");
}

KernelSpec parse_kernel(const Field& f) {
    return checked(f, [&] { return KernelSpec::from_name(f.string()); });
}

HilbertVector parse_point(const Field& f) {
    return checked(f, [&] { return HilbertVector(f.numbers()); });
}

BandwidthRule parse_bandwidth(const Field& f) {
    f.only({"rule", "h", "c", "kappa", "target"});
    BandwidthRule rule;
    const std::string kind = f.at("rule").string();
    if (kind == "fixed") {
        rule.kind = BandwidthRule::Kind::fixed;
        rule.h = f.at("h").number();
    } else if (kind == "power") {
        rule.kind = BandwidthRule::Kind::power;
        rule.c = f.at("c").number();
        rule.kappa = f.at("kappa").number();
    } else if (kind == "small_ball_target") {
        rule.kind = BandwidthRule::Kind::small_ball_target;
        rule.target = f.at("target").number();
    } else {
        f.at("rule").fail("expected fixed, power or small_ball_target");
    }
    checked(f, [&] { rule.validate(); });
    return rule;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t k = 0; k + 1 < byte && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

ConfigDocument parse_config_text(const std::string& text, const std::string& origin) {
    ConfigDocument doc;
    doc.path = origin;
    try {
        doc.root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": malformed JSON");
    }
    if (!doc.root.is_object()) throw ConfigError(origin + ": top level must be an object");
    // A run manifest carries the resolved config echo.
    if (doc.root.contains("manifest_version")) {
        const Field top(doc.root, "");
        doc.manifest_subcommand = top.at("subcommand").string();
        doc.manifest_seed = top.at("seed").u64();
        json config = top.at("config").raw();
        if (!config.is_object()) throw ConfigError(origin + ": manifest config must be an object");
        doc.root = std::move(config);
    }
    return doc;
}

ConfigDocument load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("cannot read config '" + path + "'");
    return parse_config_text(buf.str(), path);
}

LinearProcessModel parse_model(const json& root) {
    const Field model = Field(root, "").at("model");
    model.only({"kind", "dim", "order", "rho", "weights"});
    const std::string kind = model.find("kind") ? model.at("kind").string() : "weights";
    if (kind == "iid") {
        model.only({"kind", "dim"});
        const std::size_t d = model.at("dim").count();
        return checked(model, [&] { return LinearProcessModel::iid(d); });
    }
    if (kind == "geometric") {
        model.only({"kind", "dim", "order", "rho"});
        const std::size_t d = model.at("dim").count();
        const std::size_t q = model.at("order").count();
        const double rho = model.at("rho").number();
        return checked(model, [&] { return LinearProcessModel::geometric(d, q, rho); });
    }
    if (kind == "weights") {
        model.only({"kind", "dim", "weights"});
        std::optional<std::size_t> dim;
        if (auto f = model.find("dim")) dim = f->count();
        std::vector<Eigen::MatrixXd> weights;
        for (const auto& w : model.at("weights").items()) {
            weights.push_back(parse_matrix(w, dim));
            if (!dim) dim = static_cast<std::size_t>(weights.back().rows());
        }
        return checked(model, [&] { return LinearProcessModel(std::move(weights)); });
    }
    model.at("kind").fail("expected iid, geometric or weights");
}

RegressionModel parse_regression(const json& root) {
    RegressionModel reg;
    const Field top(root, "");
    auto f = top.find("regression");
    if (!f) return reg;
    f->only({"function", "noise_sd", "noise_mode", "theta"});
    if (auto g = f->find("function")) {
        reg.r = checked(*g, [&] { return RegressionFunction::from_name(g->string()); });
    }
    reg.noise_sd = number_or(*f, "noise_sd", 0.0);
    if (auto g = f->find("noise_mode")) {
        reg.noise_mode = checked(*g, [&] { return noise_mode_from_string(g->string()); });
    }
    reg.theta = number_or(*f, "theta", 0.0);
    checked(*f, [&] { reg.validate(); });
    return reg;
}

SimulateConfig parse_simulate(const json& root) {
    const Field f = Field(root, "").at("simulate");
    f.only({"n"});
    SimulateConfig cfg{f.at("n").count()};
    if (cfg.n < 1) f.at("n").fail("n must be >= 1");
    return cfg;
}

EstimateConfig parse_estimate(const json& root) {
    const Field f = Field(root, "").at("estimate");
    f.only({"sample", "queries", "h", "h_grid", "cv_indices", "kernel", "transform", "b0",
            "normalization", "norm", "oracle_draws"});
    EstimateConfig cfg;
    cfg.sample_path = f.at("sample").string();
    for (const auto& q : f.at("queries").items()) cfg.queries.push_back(parse_point(q));
    if (cfg.queries.empty()) f.at("queries").fail("at least one query point is required");
    if (auto k = f.find("kernel")) cfg.estimator.kernel = parse_kernel(*k);
    if (auto t = f.find("transform")) cfg.estimator.transform = parse_transform(*t);
    cfg.estimator.b0 = number_or(f, "b0", 5.0);
    const auto h = f.find("h");
    const auto grid = f.find("h_grid");
    if (h && grid) f.fail("give either h or h_grid, not both");
    if (!h && !grid) f.fail("one of h or h_grid is required");
    if (h) cfg.estimator.h = h->number();
    if (grid) {
        cfg.h_grid = grid->numbers();
        if (cfg.h_grid.empty()) grid->fail("bandwidth grid is empty");
        for (double v : cfg.h_grid) {
            if (!(v > 0.0)) grid->fail("bandwidths must be > 0");
        }
        cfg.estimator.h = cfg.h_grid.front();
    }
    if (auto c = f.find("cv_indices")) cfg.cv_indices = c->counts();
    checked(f, [&] { cfg.estimator.validate(); });
    const std::string mode = f.find("normalization") ? f.at("normalization").string() : "empirical";
    if (mode == "oracle") {
        cfg.oracle_norm = true;
    } else if (mode != "empirical") {
        f.at("normalization").fail("expected oracle or empirical");
    }
    if (auto n = f.find("norm")) {
        if (!cfg.oracle_norm) n->fail("an explicit norm needs normalization = oracle");
        cfg.norm = n->number();
        if (!(*cfg.norm > 0.0)) n->fail("norm must be > 0");
    }
    cfg.oracle_draws = count_or(f, "oracle_draws", cfg.oracle_draws);
    return cfg;
}

ExperimentConfig parse_experiment(const json& root) {
    ExperimentConfig cfg;
    cfg.model = parse_model(root);
    cfg.reg = parse_regression(root);
    const Field f = Field(root, "").at("experiment");
    f.only({"query", "n_schedule", "bandwidth", "replicates", "normalization", "kernel",
            "transform", "b0", "oracle_draws", "bootstrap", "self_test"});
    cfg.x = f.find("query") ? parse_point(f.at("query")) : HilbertVector::zeros(cfg.model.dim());
    if (cfg.x.dim() != cfg.model.dim()) f.at("query").fail("query dimension differs from the model");
    cfg.n_schedule = f.at("n_schedule").counts();
    cfg.bandwidth = parse_bandwidth(f.at("bandwidth"));
    cfg.replicates = f.at("replicates").count();
    if (auto n = f.find("normalization")) {
        cfg.normalization = checked(*n, [&] { return normalization_from_string(n->string()); });
    }
    if (auto k = f.find("kernel")) cfg.kernel = parse_kernel(*k);
    if (auto t = f.find("transform")) cfg.transform = parse_transform(*t);
    cfg.b0 = number_or(f, "b0", cfg.b0);
    cfg.oracle_draws = count_or(f, "oracle_draws", cfg.oracle_draws);
    cfg.bootstrap = count_or(f, "bootstrap", cfg.bootstrap);
    if (auto s = f.find("self_test")) cfg.self_test = s->boolean();
    checked(f, [&] { cfg.validate(); });
    return cfg;
}

QaCheckConfig parse_qa_check(const json& root) {
    const Field f = Field(root, "").at("qa_check");
    f.only({"I", "J", "probes", "mc_samples"});
    QaCheckConfig cfg;
    cfg.index_i = f.at("I").counts();
    cfg.index_j = f.at("J").counts();
    cfg.probes = f.at("probes").count();
    cfg.mc_samples = f.at("mc_samples").count();
    if (cfg.probes < 1) f.at("probes").fail("must be >= 1");
    if (cfg.mc_samples < 2) f.at("mc_samples").fail("must be >= 2");
    return cfg;
}

RatesConfig parse_rates(const json& root) {
    const Field f = Field(root, "").at("rates");
    f.only({"a", "b", "delta", "beta", "points", "n_schedule", "bandwidth", "small_ball"});
    RatesConfig cfg;
    cfg.params.a = f.at("a").number();
    cfg.params.b = f.at("b").number();
    cfg.params.delta = f.at("delta").number();
    cfg.params.beta = number_or(f, "beta", 1.0);
    checked(f, [&] { cfg.params.validate(); });

    if (auto pts = f.find("points")) {
        if (f.find("n_schedule")) f.fail("give either points or n_schedule, not both");
        for (const auto& p : pts->items()) {
            p.only({"n", "h", "phi_h"});
            cfg.schedule.push_back({p.at("n").count(), p.at("h").number(), p.at("phi_h").number()});
        }
    } else {
        const auto ns = f.at("n_schedule").counts();
        const Field bw = f.at("bandwidth");
        bw.only({"rule", "c", "kappa", "h"});
        const std::string rule = bw.at("rule").string();
        if (rule != "power" && rule != "fixed") bw.at("rule").fail("expected power or fixed");
        const Field sb = f.at("small_ball");
        sb.only({"kind", "b"});
        const std::string kind = sb.at("kind").string();
        std::optional<SmallBallFunction> phi;
        if (kind == "power") {
            const double b = sb.at("b").number();
            phi = checked(sb, [&] { return SmallBallFunction::power(b); });
        } else if (kind == "linear_quadratic") {
            phi = SmallBallFunction::linear_quadratic();
        } else {
            sb.at("kind").fail("expected power or linear_quadratic");
        }
        for (std::size_t n : ns) {
            const double h = rule == "fixed"
                                 ? bw.at("h").number()
                                 : bw.at("c").number() *
                                       std::pow(static_cast<double>(n), -bw.at("kappa").number());
            cfg.schedule.push_back({n, h, (*phi)(h)});
        }
    }
    if (cfg.schedule.empty()) f.fail("rate schedule is empty");
    for (const auto& p : cfg.schedule) {
        if (p.n < 2 || !(p.h > 0.0) || !(p.phi_h > 0.0)) f.fail("schedule needs n >= 2, h > 0, phi_h > 0");
    }
    return cfg;
}

}  // namespace hilreg

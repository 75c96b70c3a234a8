#include "hilreg/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hilreg/errors.hpp"
#include "hilreg/format.hpp"

namespace hilreg {

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw UsageError(std::string(what) + " must be finite");
    }
}

void require_same_dim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw UsageError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    }
}

}  // namespace

HilbertVector::HilbertVector(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw UsageError("HilbertVector needs dimension >= 1");
    require_finite(coeffs_, "HilbertVector coefficients");
}

HilbertVector::HilbertVector(std::initializer_list<double> coeffs)
    : HilbertVector(std::vector<double>(coeffs)) {}

HilbertVector::HilbertVector(std::span<const double> coeffs)
    : HilbertVector(std::vector<double>(coeffs.begin(), coeffs.end())) {}

HilbertVector HilbertVector::zeros(std::size_t d) { return HilbertVector(std::vector<double>(d, 0.0)); }

double inner_product(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a, b);
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a, b);
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double t = a[k] - b[k];
        s += t * t;
    }
    return std::sqrt(s);
}

double norm(const HilbertVector& a) { return std::sqrt(inner_product(a, a)); }

// ---------------------------------------------------------------------------

FunctionalSample::FunctionalSample(std::size_t dim, std::vector<double> coeffs,
                                   std::vector<double> y)
    : dim_(dim), coeffs_(std::move(coeffs)), y_(std::move(y)) {
    if (dim_ == 0) throw UsageError("sample dimension must be >= 1");
    if (y_.empty()) throw UsageError("sample must contain at least one record");
    if (coeffs_.size() != dim_ * y_.size()) {
        throw UsageError("sample coefficient block does not match n*d");
    }
    require_finite(coeffs_, "sample covariates");
    require_finite(y_, "sample responses");
}

FunctionalSample::FunctionalSample(const std::vector<HilbertVector>& xs, std::vector<double> y)
    : dim_(xs.empty() ? 0 : xs.front().dim()), y_(std::move(y)) {
    if (xs.size() != y_.size()) throw UsageError("covariate and response counts differ");
    if (xs.empty()) throw UsageError("sample must contain at least one record");
    coeffs_.reserve(xs.size() * dim_);
    for (const auto& x : xs) {
        if (x.dim() != dim_) throw UsageError("all covariates must share one dimension");
        coeffs_.insert(coeffs_.end(), x.coeffs().begin(), x.coeffs().end());
    }
    require_finite(y_, "sample responses");
}

FunctionalSample FunctionalSample::permuted(std::span<const std::size_t> order) const {
    if (order.size() != size()) throw UsageError("permutation length mismatch");
    std::vector<double> c;
    std::vector<double> y;
    c.reserve(coeffs_.size());
    y.reserve(y_.size());
    for (std::size_t i : order) {
        if (i >= size()) throw UsageError("permutation index out of range");
        auto row = x(i);
        c.insert(c.end(), row.begin(), row.end());
        y.push_back(y_[i]);
    }
    return FunctionalSample(dim_, std::move(c), std::move(y));
}

FunctionalSample FunctionalSample::without(std::size_t i) const {
    if (i >= size()) throw UsageError("row index out of range");
    if (size() < 2) throw UsageError("cannot remove the only record");
    std::vector<double> c(coeffs_);
    std::vector<double> y(y_);
    c.erase(c.begin() + static_cast<std::ptrdiff_t>(i * dim_),
            c.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
    y.erase(y.begin() + static_cast<std::ptrdiff_t>(i));
    return FunctionalSample(dim_, std::move(c), std::move(y));
}

// ---------------------------------------------------------------------------
// CSV: header `y,x1,...,xd`, one row per time index.

void write_sample_csv(std::ostream& out, const FunctionalSample& sample) {
    out << "y";
    for (std::size_t k = 1; k <= sample.dim(); ++k) out << ",x" << k;
    out << '\n';
    for (std::size_t i = 0; i < sample.size(); ++i) {
        out << format_double(sample.y(i));
        for (double c : sample.x(i)) out << ',' << format_double(c);
        out << '\n';
    }
}

void write_sample_csv(const std::string& path, const FunctionalSample& sample) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_sample_csv(out, sample);
    if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

}  // namespace

FunctionalSample read_sample_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw UsageError("sample CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_commas(line);
    if (header.size() < 2 || header[0] != "y") {
        throw UsageError("sample CSV header must be 'y,x1,...,xd'");
    }
    const std::size_t d = header.size() - 1;
    for (std::size_t k = 1; k <= d; ++k) {
        if (header[k] != "x" + std::to_string(k)) {
            throw UsageError("sample CSV header column " + std::to_string(k + 1) + " must be 'x" +
                             std::to_string(k) + "'");
        }
    }
    std::vector<double> coeffs;
    std::vector<double> y;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != d + 1) {
            throw UsageError("sample CSV line " + std::to_string(lineno) + ": expected " +
                             std::to_string(d + 1) + " fields");
        }
        try {
            y.push_back(parse_double(fields[0]));
            for (std::size_t k = 1; k <= d; ++k) coeffs.push_back(parse_double(fields[k]));
        } catch (const UsageError& e) {
            throw UsageError("sample CSV line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (y.empty()) throw UsageError("sample CSV has no data rows");
    return FunctionalSample(d, std::move(coeffs), std::move(y));
}

FunctionalSample read_sample_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_sample_csv(in);
}

// ---------------------------------------------------------------------------

Transform::Transform(Kind kind, std::string name, double lip, double clip,
                     std::function<double(double)> fn)
    : kind_(kind), name_(std::move(name)), lip_(lip), clip_(clip), fn_(std::move(fn)) {
    if (!(lip_ > 0.0) || !std::isfinite(lip_)) {
        throw UsageError("transform Lipschitz constant must be finite and > 0");
    }
}

Transform Transform::identity() {
    return Transform(Kind::identity, "identity", 1.0, 0.0, nullptr);
}

Transform Transform::clip(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw UsageError("clip level must be finite and > 0");
    return Transform(Kind::clip, "clip", 1.0, c, nullptr);
}

Transform Transform::custom(std::string name, double lip, std::function<double(double)> fn) {
    if (!fn) throw UsageError("custom transform needs an evaluator");
    return Transform(Kind::custom, std::move(name), lip, 0.0, std::move(fn));
}

Transform Transform::named(const std::string& name) {
    if (name == "identity") return identity();
    if (name == "tanh") return custom("tanh", 1.0, [](double u) { return std::tanh(u); });
    if (name == "atan") return custom("atan", 1.0, [](double u) { return std::atan(u); });
    if (name == "abs") return custom("abs", 1.0, [](double u) { return std::abs(u); });
    throw UsageError("unknown transform '" + name + "'");
}

double Transform::operator()(double u) const {
    switch (kind_) {
        case Kind::identity:
            return u;
        case Kind::clip:
            return std::clamp(u, -clip_, clip_);
        case Kind::custom:
            return fn_(u);
    }
    return u;
}

Transform Transform::scaled(double factor) const {
    if (!(factor != 0.0) || !std::isfinite(factor)) throw UsageError("scale factor must be finite and nonzero");
    auto self = *this;
    return custom(name_ + "*" + format_double(factor), lip_ * std::abs(factor),
                  [self, factor](double u) { return factor * self(u); });
}

}  // namespace hilreg

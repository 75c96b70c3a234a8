#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hilreg {

/// A point of the separable Hilbert space, stored as its first d coefficients
/// <x, e_1>, ..., <x, e_d> in a fixed orthonormal basis.
class HilbertVector {
public:
    HilbertVector() = default;
    explicit HilbertVector(std::vector<double> coeffs);
    HilbertVector(std::initializer_list<double> coeffs);
    explicit HilbertVector(std::span<const double> coeffs);

    static HilbertVector zeros(std::size_t d);

    std::size_t dim() const noexcept { return coeffs_.size(); }
    double operator[](std::size_t k) const { return coeffs_[k]; }
    std::span<const double> coeffs() const noexcept { return coeffs_; }

    friend bool operator==(const HilbertVector&, const HilbertVector&) = default;

private:
    std::vector<double> coeffs_;
};

double inner_product(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);

inline double inner_product(const HilbertVector& a, const HilbertVector& b) {
    return inner_product(a.coeffs(), b.coeffs());
}
inline double distance(const HilbertVector& a, const HilbertVector& b) {
    return distance(a.coeffs(), b.coeffs());
}
double norm(const HilbertVector& a);

/// Ordered stationary sample (X_1, Y_1), ..., (X_n, Y_n). Covariates are
/// stored contiguously, row i holding the d coefficients of X_i.
class FunctionalSample {
public:
    struct Record {
        std::span<const double> x;
        double y;
    };

    FunctionalSample(std::size_t dim, std::vector<double> coeffs, std::vector<double> y);
    FunctionalSample(const std::vector<HilbertVector>& xs, std::vector<double> y);

    std::size_t size() const noexcept { return y_.size(); }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const double> x(std::size_t i) const {
        return {coeffs_.data() + i * dim_, dim_};
    }
    double y(std::size_t i) const { return y_[i]; }
    Record operator[](std::size_t i) const { return {x(i), y_[i]}; }

    std::span<const double> responses() const noexcept { return y_; }

    /// Sample with rows reordered as `order[0], order[1], ...`.
    FunctionalSample permuted(std::span<const std::size_t> order) const;
    /// Sample with row `i` removed.
    FunctionalSample without(std::size_t i) const;

    friend bool operator==(const FunctionalSample&, const FunctionalSample&) = default;

private:
    std::size_t dim_;
    std::vector<double> coeffs_;
    std::vector<double> y_;
};

void write_sample_csv(std::ostream& out, const FunctionalSample& sample);
void write_sample_csv(const std::string& path, const FunctionalSample& sample);
FunctionalSample read_sample_csv(std::istream& in);
FunctionalSample read_sample_csv(const std::string& path);

/// The response transform phi applied to Y before averaging. Carries a valid
/// Lipschitz constant.
class Transform {
public:
    enum class Kind { identity, clip, custom };

    static Transform identity();
    /// phi(u) = clamp(u, -c, c).
    static Transform clip(double c);
    static Transform custom(std::string name, double lip, std::function<double(double)> fn);
    /// Built-in named table: "identity", "tanh", "atan", "abs".
    static Transform named(const std::string& name);

    double operator()(double u) const;
    double lipschitz() const noexcept { return lip_; }
    Kind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }
    double clip_level() const noexcept { return clip_; }

    /// Same transform multiplied by `factor` (Lipschitz constant scales by |factor|).
    Transform scaled(double factor) const;

private:
    Transform(Kind kind, std::string name, double lip, double clip,
              std::function<double(double)> fn);

    Kind kind_;
    std::string name_;
    double lip_;
    double clip_ = 0.0;
    std::function<double(double)> fn_;
};

}  // namespace hilreg

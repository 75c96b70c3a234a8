#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hilreg/hilbert.hpp"
#include "hilreg/rng.hpp"

namespace hilreg::testing {

// Random sample with coordinates in [-1, 1] and responses in [-2, 2].
inline FunctionalSample random_sample(std::size_t n, std::size_t d, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> c(n * d);
    std::vector<double> y(n);
    for (double& v : c) v = u(rng);
    for (double& v : y) v = 2.0 * u(rng);
    return FunctionalSample(d, std::move(c), std::move(y));
}

inline HilbertVector random_point(std::size_t d, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> c(d);
    for (double& v : c) v = u(rng);
    return HilbertVector(std::move(c));
}

}  // namespace hilreg::testing

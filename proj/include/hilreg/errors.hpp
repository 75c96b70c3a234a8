#pragma once

#include <stdexcept>
#include <string>

namespace hilreg {

/// Caller violated a precondition (bad dimension, nonpositive bandwidth, ...).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// No sample point lies inside the kernel window around the query point.
class NoNeighbors : public std::runtime_error {
public:
    NoNeighbors(double min_distance, double h)
        : std::runtime_error("no sample point within bandwidth " + std::to_string(h) +
                             " (closest at " + std::to_string(min_distance) + ")"),
          min_distance_(min_distance), h_(h) {}

    double min_distance() const noexcept { return min_distance_; }
    double bandwidth() const noexcept { return h_; }

private:
    double min_distance_;
    double h_;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SelectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateVariance : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An experiment could not produce a usable report (too many failed replicates).
class ExperimentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hilreg

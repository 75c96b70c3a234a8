#pragma once

#include <functional>

namespace hilreg {

struct QuadratureResult {
    double value;
    double error_estimate;
};

/// Adaptive 15-point Gauss-Kronrod integral of f over the finite interval
/// [a, b], refined until the error estimate is below `rel_tol` relative.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol = 1e-10, unsigned max_depth = 30);

/// E f(Z) for Z ~ N(mean, sd^2); sd == 0 collapses to f(mean).
double gaussian_expectation(const std::function<double(double)>& f, double mean, double sd,
                            double rel_tol = 1e-10);

/// E[f(U) g(V)] for a centered bivariate normal with Var U = var_u,
/// Var V = var_v, Cov(U, V) = cov.
double bivariate_gaussian_expectation(const std::function<double(double)>& f,
                                      const std::function<double(double)>& g, double var_u,
                                      double var_v, double cov, double rel_tol = 1e-9);

}  // namespace hilreg

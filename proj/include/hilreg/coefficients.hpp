#pragma once

#include <vector>

namespace hilreg {

/// Stationary dependence coefficients. lag_lambda[s] is lambda_{i,i+s} (the
/// summed absolute componentwise covariances of Z_i = (X_i, Y_i) and
/// Z_{i+s}); lambda_k[k] is the per-index tail sup_{s>=k} sum_{j:|i-j|>=s}
/// lambda_{i,j}.
struct DependenceCoefficients {
    std::vector<double> lag_lambda;
    std::vector<double> lambda_k;
};

}  // namespace hilreg

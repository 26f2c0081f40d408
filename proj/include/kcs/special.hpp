#pragma once

#include <cstddef>

namespace kcs {

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

// Standard normal quantile, p in (0, 1).
double normal_quantile(double p);

// Upper-alpha quantile of the chi-squared distribution with m degrees of
// freedom: the q with P(X <= q) = 1 - alpha, solved to 1e-12 in CDF value.
double chi_squared_quantile(std::size_t m, double alpha);

}  // namespace kcs

#pragma once

#include "kcs/covariance.hpp"

namespace kcs {

// Elliptical confidence set {w : |inv_sqrt (w - center)|^2 <= chi2 / n}.
struct ConfidenceEllipsoid {
  Vector center;
  CovarianceEstimate cov;
  std::size_t n = 0;
  double alpha = 0.05;
  double chi2 = 0.0;      // upper-alpha chi-squared quantile, m degrees of freedom
  Matrix inv_sqrt{1, 1};  // cached symmetric inverse square root of cov.sigma
};

// The explicit n governs the radius; cov.n is metadata only. A covariance
// with smallest eigenvalue at or below 1e-12 * trace is rejected as
// degenerate: a full-rank derivative matrix (see rank_test) is the usual fix.
ConfidenceEllipsoid build_ellipsoid(Vector center, CovarianceEstimate cov,
                                    std::size_t n, double alpha);

bool contains(const ConfidenceEllipsoid& e, const Vector& w);

struct PrincipalAxis {
  double length = 0.0;
  Vector direction;  // unit vector, sign-canonicalized
};

// Semi-axes sqrt(chi2 * eigenvalue / n) along the covariance eigenvectors,
// in descending length order.
std::vector<PrincipalAxis> principal_axes(const ConfidenceEllipsoid& e);

// One-dimensional special case: center -/+ sqrt(chi2 * sigma / n).
std::pair<double, double> interval(const ConfidenceEllipsoid& e);

}  // namespace kcs

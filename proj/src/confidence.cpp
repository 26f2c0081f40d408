#include "kcs/confidence.hpp"

#include <cmath>
#include <utility>

#include "kcs/decomp.hpp"
#include "kcs/error.hpp"
#include "kcs/special.hpp"

namespace kcs {

ConfidenceEllipsoid build_ellipsoid(Vector center, CovarianceEstimate cov,
                                    std::size_t n, double alpha) {
  const std::size_t m = center.size();
  if (m == 0) throw ContractViolation("build_ellipsoid: empty center");
  if (cov.sigma.rows() != m || cov.sigma.cols() != m)
    throw ContractViolation("build_ellipsoid: covariance shape does not match center");
  if (n == 0) throw ContractViolation("build_ellipsoid: sample size must be positive");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ContractViolation("build_ellipsoid: alpha must lie in (0, 1)");

  const SymEigResult eig = sym_eig(cov.sigma);
  double trace = 0.0;
  for (std::size_t j = 0; j < m; ++j) trace += cov.sigma(j, j);
  const double min_eig = eig.values.back();
  if (!(min_eig > 1e-12 * trace))
    throw DegenerateCovariance(
        "build_ellipsoid: covariance is numerically singular (smallest eigenvalue " +
            std::to_string(min_eig) +
            "); check the functional derivative matrix with rank_test",
        min_eig);

  ConfidenceEllipsoid e;
  e.center = std::move(center);
  e.cov = std::move(cov);
  e.n = n;
  e.alpha = alpha;
  e.chi2 = chi_squared_quantile(m, alpha);
  e.inv_sqrt = spd_inv_sqrt(e.cov.sigma);
  return e;
}

bool contains(const ConfidenceEllipsoid& e, const Vector& w) {
  if (w.size() != e.center.size())
    throw ContractViolation("contains: dimension mismatch");
  Vector diff(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) diff[j] = w[j] - e.center[j];
  const Vector r = matvec(e.inv_sqrt, diff);
  double q = 0.0;
  for (double v : r) q += v * v;
  const double bound = e.chi2 / static_cast<double>(e.n);
  // Relative slack keeps exact boundary points inside despite roundoff.
  return q <= bound * (1.0 + 1e-9);
}

std::vector<PrincipalAxis> principal_axes(const ConfidenceEllipsoid& e) {
  const SymEigResult eig = sym_eig(e.cov.sigma);
  const std::size_t m = e.center.size();
  std::vector<PrincipalAxis> axes(m);
  for (std::size_t j = 0; j < m; ++j) {
    axes[j].length =
        std::sqrt(e.chi2 * eig.values[j] / static_cast<double>(e.n));
    axes[j].direction.resize(m);
    for (std::size_t i = 0; i < m; ++i) axes[j].direction[i] = eig.vectors(i, j);
    // Canonical sign: largest-magnitude entry positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (std::abs(axes[j].direction[i]) > std::abs(axes[j].direction[arg])) arg = i;
    }
    if (axes[j].direction[arg] < 0.0) {
      for (double& v : axes[j].direction) v = -v;
    }
  }
  return axes;
}

std::pair<double, double> interval(const ConfidenceEllipsoid& e) {
  if (e.center.size() != 1)
    throw ContractViolation("interval: defined only for one-dimensional sets");
  const double half =
      std::sqrt(e.chi2 * e.cov.sigma(0, 0) / static_cast<double>(e.n));
  return {e.center[0] - half, e.center[0] + half};
}

}  // namespace kcs

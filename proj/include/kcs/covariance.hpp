#pragma once

#include "kcs/functional.hpp"

namespace kcs {

// Maximal linearly independent subset of the training feature vectors and the
// expansion of every feature vector in that subset: column i of b holds the
// coefficients of x_i over the basis points, so columns at basis indices are
// exact unit coordinate vectors.
struct BasisDecomposition {
  std::vector<std::size_t> basis_indices;  // ascending, size r
  Matrix b{1, 1};                          // r x n
};

// Gaussian RBF features of distinct points are independent, so that family
// only needs exact-tie grouping; other kernels fall back to pivoted Cholesky
// of the Gram matrix. tol < 0 selects 1e-10 * max Gram diagonal.
BasisDecomposition basis_decomposition(const Dataset& data, const KernelSpec& kernel,
                                       double tol = -1.0);

// A = 2*lambda*I + (1/n) * diag(L''(y_i, f(x_i))) * Gram.
Matrix build_a(const Dataset& data, const FittedModel& model);

struct CovarianceEstimate {
  Matrix sigma{1, 1};     // m x m, exactly symmetric
  std::size_t n = 0;
  double lambda = 0.0;
  Matrix g_values{1, 1};  // n x m, per-observation influence values
};

// Shared machinery for covariance estimation: factors the alpha system once,
// then serves any number of functionals against the same fitted model. Holds
// non-owning pointers; data, model, and basis must outlive the solver.
class CovarianceSolver {
 public:
  CovarianceSolver(const Dataset& data, const FittedModel& model,
                   const BasisDecomposition& basis);

  // Expansion coefficients alpha(x): the inverse covariance operator applied
  // to the feature vector of x equals (1/(2*lambda)) * Phi(x) + sum_i alpha_i(x) Phi(x_i).
  Vector alpha_at(std::span<const double> x) const;

  // Row j of the result evaluates the inverse operator applied to psi'_j at
  // every training point: h(j, l) = psi(j, l)/(2*lambda) + sum_i alpha_i(x_l) psi(j, i).
  Matrix h_matrix(const Matrix& psi) const;

  CovarianceEstimate estimate(const Functional& fun) const;

 private:
  const Dataset* data_;
  const FittedModel* model_;
  std::size_t n_;
  double lambda_;
  Vector lprime_;  // L' at the fitted values
  Vector w_;       // L'' at the fitted values
  Vector sw_;      // sqrt(w), fast path only
  bool fast_ = false;
  Matrix chol_{1, 1};   // fast path: upper factor of 2*lambda*I + (1/n) S G S
  Matrix alpha_{1, 1};  // general path: column l = alpha(x_l)
  Matrix p_{1, 1};      // general path: pinv(B A) B
};

// One-shot wrappers over CovarianceSolver.
Vector alpha_coefficients(const Dataset& data, const FittedModel& model,
                          const BasisDecomposition& basis, std::span<const double> x);

// g(x, y) = -L'(y, f(x)) * [psi'(x)/(2*lambda) + sum_i alpha_i(x) psi'(x_i)].
Vector g_value(const Dataset& data, const FittedModel& model,
               const BasisDecomposition& basis, const Functional& fun,
               std::span<const double> x, double y);

// Centered outer-product average of the per-observation g values.
CovarianceEstimate sigma_hat(const Dataset& data, const FittedModel& model,
                             const BasisDecomposition& basis, const Functional& fun);

}  // namespace kcs

#pragma once

#include "kcs/dataset.hpp"
#include "kcs/kernel.hpp"
#include "kcs/loss.hpp"

namespace kcs {

struct FitDiagnostics {
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  double objective = 0.0;
  bool converged = false;
};

struct FittedModel {
  Matrix support;       // training covariates
  Vector coefficients;  // representer coefficients, one per support point
  double lambda = 0.0;
  KernelSpec kernel;
  LossSpec loss;
  Matrix gram;    // training Gram matrix, kept for downstream reuse
  Vector fitted;  // f(x_i) at the support points
  FitDiagnostics diagnostics;
};

struct FitOptions {
  std::size_t max_iterations = 100;
  double gradient_tol = 1e-9;  // relative to max(1, |objective|)
  double step_tol = 1e-12;
  const Matrix* gram = nullptr;       // precomputed training Gram matrix
  const Vector* warm_start = nullptr; // starting coefficients (default zero)
};

// Minimizes (1/n) sum L(y_i, f(x_i)) + lambda |f|_H^2 over the span of the
// training feature vectors by damped Newton on the coefficients.
FittedModel fit(const Dataset& data, const KernelSpec& kernel, const LossSpec& loss,
                double lambda, const FitOptions& opts = {});

double evaluate(const FittedModel& m, std::span<const double> x);
Vector evaluate_many(const FittedModel& m, const Matrix& points);

// Regularized empirical risk of an arbitrary coefficient vector.
double objective(const Dataset& data, const KernelSpec& kernel, const LossSpec& loss,
                 double lambda, const Vector& coefficients);

// |f|_H^2 = a^T G a.
double h_norm_sq(const FittedModel& m);

}  // namespace kcs

#pragma once

#include "kcs/solver.hpp"

namespace kcs {

enum class FunctionalKind {
  Pointwise,      // (f(p_1), ..., f(p_m))
  InnerProducts,  // (<f, h_1>, ..., <f, h_m>) with h_j = sum_l C(j,l) k(., z_l)
  GradientAt,     // gradient of f at x0, m = d
  Integral,       // integral of f over a box, empirical or midpoint-grid measure
  SquaredHNorm,   // |f|_H^2
  SquaredL2Norm,  // integral of f^2 over a box, midpoint grid
};

enum class IntegralMeasure { Empirical, LebesgueGrid };

// A map psi: H -> R^m, differentiable at every model, with the derivative
// exposed only through pointwise evaluation of its m representer functions.
// Linear kinds have model-independent derivatives; the squared norms plug the
// fitted model into the derivative formula.
struct Functional {
  FunctionalKind kind = FunctionalKind::Pointwise;
  Matrix points{1, 1};  // Pointwise: m eval points; InnerProducts: q representer points
  Matrix coeffs{1, 1};  // InnerProducts: m x q expansion coefficients
  Vector x0;            // GradientAt
  Vector lo, hi;        // Integral / SquaredL2Norm box bounds
  IntegralMeasure measure = IntegralMeasure::Empirical;
  std::size_t nodes_per_axis = 201;  // midpoint rule resolution

  static Functional pointwise(Matrix eval_points);
  static Functional inner_products(Matrix representer_points, Matrix coefficients);
  static Functional gradient_at(Vector x0);
  static Functional integral(Vector lo, Vector hi, IntegralMeasure measure,
                             std::size_t nodes_per_axis = 201);
  static Functional squared_h_norm(std::size_t dim);
  static Functional squared_l2_norm(Vector lo, Vector hi, std::size_t nodes_per_axis = 201);

  std::size_t output_dim() const;
  std::size_t input_dim() const;
};

// psi applied to the fitted model.
Vector psi_value(const Functional& fun, const FittedModel& model);

// (psi'_1(x), ..., psi'_m(x)) where psi'_j is the representer of the j-th
// coordinate of the derivative at the fitted model.
Vector psi_prime_eval(const Functional& fun, const FittedModel& model,
                      std::span<const double> x);

// m x n matrix with entries psi'_j(x_i) over the dataset covariates.
Matrix psi_matrix(const Functional& fun, const FittedModel& model, const Dataset& data);

struct RankTest {
  bool full_rank = false;
  std::size_t numerical_rank = 0;
};

// Numerical row rank of the m x n derivative matrix via SVD. Full rank is the
// sufficient condition for the covariance estimate to be invertible in the limit.
RankTest rank_test(const Matrix& psi, double rtol = -1.0);

// Midpoint-rule nodes and cell volumes for the box [lo, hi], nodes_per_axis
// points per dimension.
std::pair<Matrix, Vector> midpoint_grid(const Vector& lo, const Vector& hi,
                                        std::size_t nodes_per_axis);

}  // namespace kcs

#include "kcs/functional.hpp"

#include <cmath>
#include <utility>

#include "kcs/decomp.hpp"
#include "kcs/error.hpp"

namespace kcs {

namespace {

bool in_box(std::span<const double> x, const Vector& lo, const Vector& hi) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < lo[j] || x[j] > hi[j]) return false;
  }
  return true;
}

// The gradient functional is only meaningful at interior points of the
// covariate domain; the sample bounding box is the observable proxy.
void check_gradient_domain(const Vector& x0, const Matrix& support) {
  for (std::size_t j = 0; j < x0.size(); ++j) {
    double lo = support(0, j), hi = support(0, j);
    for (std::size_t i = 1; i < support.rows(); ++i) {
      lo = std::min(lo, support(i, j));
      hi = std::max(hi, support(i, j));
    }
    if (!(x0[j] > lo && x0[j] < hi))
      throw DomainWarning("gradient functional: x0 lies outside the interior of the observed covariate range");
  }
}

void check_model(const Functional& fun, const FittedModel& model) {
  if (fun.input_dim() != model.kernel.dim)
    throw ContractViolation("functional: input dimension does not match model kernel");
}

// Nodes and weights of the measure backing an integral-type functional.
// Empirical: training covariates inside the box, each weighted 1/n.
// LebesgueGrid: midpoint nodes weighted by cell volume.
std::pair<Matrix, Vector> integral_nodes(const Functional& fun, const Matrix& support) {
  if (fun.measure == IntegralMeasure::LebesgueGrid)
    return midpoint_grid(fun.lo, fun.hi, fun.nodes_per_axis);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < support.rows(); ++i) {
    if (in_box(support.row_span(i), fun.lo, fun.hi)) idx.push_back(i);
  }
  const double wi = 1.0 / static_cast<double>(support.rows());
  if (idx.empty()) {
    // Empty intersection: the zero functional, represented by a single
    // zero-weight node at the box corner.
    Matrix nodes(1, fun.lo.size());
    for (std::size_t j = 0; j < fun.lo.size(); ++j) nodes(0, j) = fun.lo[j];
    return {std::move(nodes), Vector(1, 0.0)};
  }
  Matrix nodes = take_rows(support, idx);
  return {std::move(nodes), Vector(idx.size(), wi)};
}

}  // namespace

Functional Functional::pointwise(Matrix eval_points) {
  Functional f;
  f.kind = FunctionalKind::Pointwise;
  f.points = std::move(eval_points);
  return f;
}

Functional Functional::inner_products(Matrix representer_points, Matrix coefficients) {
  if (coefficients.cols() != representer_points.rows())
    throw ContractViolation("inner_products: coefficient columns must match representer points");
  Functional f;
  f.kind = FunctionalKind::InnerProducts;
  f.points = std::move(representer_points);
  f.coeffs = std::move(coefficients);
  return f;
}

Functional Functional::gradient_at(Vector x0) {
  if (x0.empty()) throw ContractViolation("gradient_at: empty point");
  Functional f;
  f.kind = FunctionalKind::GradientAt;
  f.x0 = std::move(x0);
  return f;
}

Functional Functional::integral(Vector lo, Vector hi, IntegralMeasure measure,
                                std::size_t nodes_per_axis) {
  if (lo.size() != hi.size() || lo.empty())
    throw ContractViolation("integral: box bounds must be nonempty and matching");
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (!(lo[j] < hi[j])) throw ContractViolation("integral: box must have positive volume");
  }
  Functional f;
  f.kind = FunctionalKind::Integral;
  f.lo = std::move(lo);
  f.hi = std::move(hi);
  f.measure = measure;
  f.nodes_per_axis = nodes_per_axis;
  return f;
}

Functional Functional::squared_h_norm(std::size_t dim) {
  if (dim == 0) throw ContractViolation("squared_h_norm: dimension must be positive");
  Functional f;
  f.kind = FunctionalKind::SquaredHNorm;
  f.x0.assign(dim, 0.0);  // records the input dimension only
  return f;
}

Functional Functional::squared_l2_norm(Vector lo, Vector hi, std::size_t nodes_per_axis) {
  Functional f = integral(std::move(lo), std::move(hi), IntegralMeasure::LebesgueGrid,
                          nodes_per_axis);
  f.kind = FunctionalKind::SquaredL2Norm;
  return f;
}

std::size_t Functional::output_dim() const {
  switch (kind) {
    case FunctionalKind::Pointwise: return points.rows();
    case FunctionalKind::InnerProducts: return coeffs.rows();
    case FunctionalKind::GradientAt: return x0.size();
    case FunctionalKind::Integral:
    case FunctionalKind::SquaredHNorm:
    case FunctionalKind::SquaredL2Norm: return 1;
  }
  return 0;
}

std::size_t Functional::input_dim() const {
  switch (kind) {
    case FunctionalKind::Pointwise:
    case FunctionalKind::InnerProducts: return points.cols();
    case FunctionalKind::GradientAt:
    case FunctionalKind::SquaredHNorm: return x0.size();
    case FunctionalKind::Integral:
    case FunctionalKind::SquaredL2Norm: return lo.size();
  }
  return 0;
}

Vector psi_value(const Functional& fun, const FittedModel& model) {
  check_model(fun, model);
  switch (fun.kind) {
    case FunctionalKind::Pointwise:
      return evaluate_many(model, fun.points);
    case FunctionalKind::InnerProducts: {
      const Vector vals = evaluate_many(model, fun.points);
      return matvec(fun.coeffs, vals);
    }
    case FunctionalKind::GradientAt: {
      check_gradient_domain(fun.x0, model.support);
      Vector out(fun.x0.size(), 0.0);
      for (std::size_t i = 0; i < model.support.rows(); ++i) {
        const Vector g = k_grad2(model.kernel, model.support.row_span(i), fun.x0);
        for (std::size_t j = 0; j < out.size(); ++j)
          out[j] += model.coefficients[i] * g[j];
      }
      return out;
    }
    case FunctionalKind::Integral: {
      const auto [nodes, wts] = integral_nodes(fun, model.support);
      const Vector vals = evaluate_many(model, nodes);
      return Vector{dot(wts, vals)};
    }
    case FunctionalKind::SquaredHNorm:
      return Vector{h_norm_sq(model)};
    case FunctionalKind::SquaredL2Norm: {
      const auto [nodes, wts] = integral_nodes(fun, model.support);
      const Vector vals = evaluate_many(model, nodes);
      double s = 0.0;
      for (std::size_t l = 0; l < wts.size(); ++l) s += wts[l] * vals[l] * vals[l];
      return Vector{s};
    }
  }
  throw ContractViolation("psi_value: unknown functional kind");
}

Vector psi_prime_eval(const Functional& fun, const FittedModel& model,
                      std::span<const double> x) {
  check_model(fun, model);
  if (x.size() != fun.input_dim())
    throw ContractViolation("psi_prime_eval: point dimension mismatch");
  switch (fun.kind) {
    case FunctionalKind::Pointwise: {
      Vector out(fun.points.rows());
      for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = k_eval(model.kernel, x, fun.points.row_span(j));
      return out;
    }
    case FunctionalKind::InnerProducts: {
      const Vector kx = kernel_column(model.kernel, fun.points, x);
      return matvec(fun.coeffs, kx);
    }
    case FunctionalKind::GradientAt:
      check_gradient_domain(fun.x0, model.support);
      return k_grad2(model.kernel, x, fun.x0);
    case FunctionalKind::Integral: {
      const auto [nodes, wts] = integral_nodes(fun, model.support);
      const Vector kx = kernel_column(model.kernel, nodes, x);
      return Vector{dot(wts, kx)};
    }
    case FunctionalKind::SquaredHNorm:
      return Vector{2.0 * evaluate(model, x)};
    case FunctionalKind::SquaredL2Norm: {
      const auto [nodes, wts] = integral_nodes(fun, model.support);
      const Vector vals = evaluate_many(model, nodes);
      const Vector kx = kernel_column(model.kernel, nodes, x);
      double s = 0.0;
      for (std::size_t l = 0; l < wts.size(); ++l) s += 2.0 * wts[l] * vals[l] * kx[l];
      return Vector{s};
    }
  }
  throw ContractViolation("psi_prime_eval: unknown functional kind");
}

Matrix psi_matrix(const Functional& fun, const FittedModel& model, const Dataset& data) {
  check_model(fun, model);
  if (data.dim() != fun.input_dim())
    throw ContractViolation("psi_matrix: dataset dimension mismatch");
  const std::size_t n = data.size();
  switch (fun.kind) {
    case FunctionalKind::Pointwise:
      return cross_gram(model.kernel, fun.points, data.x);
    case FunctionalKind::InnerProducts:
      return matmul(fun.coeffs, cross_gram(model.kernel, fun.points, data.x));
    case FunctionalKind::GradientAt: {
      check_gradient_domain(fun.x0, model.support);
      Matrix psi(fun.x0.size(), n);
      for (std::size_t i = 0; i < n; ++i) {
        const Vector g = k_grad2(model.kernel, data.x.row_span(i), fun.x0);
        for (std::size_t j = 0; j < g.size(); ++j) psi(j, i) = g[j];
      }
      return psi;
    }
    case FunctionalKind::Integral: {
      const auto [nodes, wts] = integral_nodes(fun, model.support);
      const Matrix kx = cross_gram(model.kernel, nodes, data.x);  // q x n
      Matrix psi(1, n);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t l = 0; l < wts.size(); ++l) s += wts[l] * kx(l, i);
        psi(0, i) = s;
      }
      return psi;
    }
    case FunctionalKind::SquaredHNorm: {
      const Vector vals = evaluate_many(model, data.x);
      Matrix psi(1, n);
      for (std::size_t i = 0; i < n; ++i) psi(0, i) = 2.0 * vals[i];
      return psi;
    }
    case FunctionalKind::SquaredL2Norm: {
      const auto [nodes, wts] = integral_nodes(fun, model.support);
      const Vector vals = evaluate_many(model, nodes);
      const Matrix kx = cross_gram(model.kernel, nodes, data.x);  // q x n
      Matrix psi(1, n);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t l = 0; l < wts.size(); ++l)
          s += 2.0 * wts[l] * vals[l] * kx(l, i);
        psi(0, i) = s;
      }
      return psi;
    }
  }
  throw ContractViolation("psi_matrix: unknown functional kind");
}

RankTest rank_test(const Matrix& psi, double rtol) {
  const SvdResult dec = svd(psi);
  const std::size_t m = psi.rows();
  double smax = 0.0;
  for (double s : dec.s) smax = std::max(smax, s);
  const double eps = std::numeric_limits<double>::epsilon();
  const double cut =
      (rtol < 0.0 ? eps * static_cast<double>(std::max(psi.rows(), psi.cols())) : rtol) * smax;
  RankTest out;
  for (double s : dec.s) {
    if (s > cut) ++out.numerical_rank;
  }
  out.full_rank = out.numerical_rank == m;
  return out;
}

std::pair<Matrix, Vector> midpoint_grid(const Vector& lo, const Vector& hi,
                                        std::size_t nodes_per_axis) {
  if (lo.size() != hi.size() || lo.empty())
    throw ContractViolation("midpoint_grid: box bounds must be nonempty and matching");
  if (nodes_per_axis == 0) throw ContractViolation("midpoint_grid: need at least one node");
  const std::size_t d = lo.size();
  double cell = 1.0;
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (!(lo[j] < hi[j])) throw ContractViolation("midpoint_grid: box must have positive volume");
    cell *= (hi[j] - lo[j]) / static_cast<double>(nodes_per_axis);
    if (total > 10'000'000 / nodes_per_axis)
      throw ContractViolation("midpoint_grid: node count exceeds 1e7");
    total *= nodes_per_axis;
  }
  Matrix nodes(total, d);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t r = 0; r < total; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      nodes(r, j) = lo[j] + (static_cast<double>(idx[j]) + 0.5) * (hi[j] - lo[j]) /
                                static_cast<double>(nodes_per_axis);
    }
    for (std::size_t j = d; j-- > 0;) {  // odometer, last axis fastest
      if (++idx[j] < nodes_per_axis) break;
      idx[j] = 0;
    }
  }
  return {std::move(nodes), Vector(total, cell)};
}

}  // namespace kcs

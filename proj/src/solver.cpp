#include "kcs/solver.hpp"

#include <algorithm>
#include <cmath>

#include "kcs/decomp.hpp"
#include "kcs/error.hpp"

namespace kcs {

namespace {

// Objective and pieces for a coefficient vector, given u = G a.
double objective_from_values(const Dataset& data, const LossSpec& loss, double lambda,
                             const Vector& a, const Vector& u) {
  const std::size_t n = data.size();
  double risk = 0.0;
  for (std::size_t i = 0; i < n; ++i) risk += kcs::loss(loss, data.y[i], u[i]);
  risk /= static_cast<double>(n);
  double reg = 0.0;
  for (std::size_t i = 0; i < n; ++i) reg += a[i] * u[i];
  return risk + lambda * reg;
}

}  // namespace

FittedModel fit(const Dataset& data, const KernelSpec& kernel, const LossSpec& loss,
                double lambda, const FitOptions& opts) {
  validate(data);
  if (data.dim() != kernel.dim)
    throw ContractViolation("fit: kernel dimension does not match data");
  if (loss.classification() != (data.task == Task::Classification))
    throw ContractViolation("fit: loss family does not match dataset task");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ContractViolation("fit: lambda must be positive and finite");
  for (double y : data.y) check_response(loss, y);

  const std::size_t n = data.size();
  const double nd = static_cast<double>(n);

  Matrix g = opts.gram != nullptr ? *opts.gram : gram(kernel, data.x);
  if (g.rows() != n || g.cols() != n)
    throw ContractViolation("fit: precomputed Gram matrix has wrong shape");

  Vector a(n, 0.0);
  Vector u(n, 0.0);  // u = G a
  if (opts.warm_start != nullptr) {
    if (opts.warm_start->size() != n)
      throw ContractViolation("fit: warm start has wrong length");
    a = *opts.warm_start;
    u = matvec(g, a);
    // A bad warm start must not make things worse than the zero vector.
    Vector zero(n, 0.0);
    if (!(objective_from_values(data, loss, lambda, a, u) <=
          objective_from_values(data, loss, lambda, zero, zero))) {
      std::fill(a.begin(), a.end(), 0.0);
      std::fill(u.begin(), u.end(), 0.0);
    }
  }

  double obj = objective_from_values(data, loss, lambda, a, u);

  Vector lp(n), w(n), gt(n);  // L', L'', and the reduced gradient
  Vector d(n), gd(n), a_try(n), u_try(n);
  FitDiagnostics diag;

  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      lp[i] = dloss(loss, data.y[i], u[i]);
      w[i] = ddloss(loss, data.y[i], u[i]);
    }
    // gt = (1/n) L' + 2 lambda a; the coefficient gradient is G gt.
    for (std::size_t i = 0; i < n; ++i) gt[i] = lp[i] / nd + 2.0 * lambda * a[i];
    const Vector grad = matvec(g, gt);
    const double gnorm = norm2(grad);
    diag.iterations = iter;
    diag.gradient_norm = gnorm;
    diag.objective = obj;
    if (gnorm <= opts.gradient_tol * std::max(1.0, std::abs(obj))) {
      diag.converged = true;
      break;
    }

    // Newton direction. Rows with w_i > 0 solve the similarity-transformed
    // system (2 lambda I + (1/n) W^{1/2} G W^{1/2}) z = -W^{1/2} rhs with
    // d = W^{1/2} z; rows with w_i = 0 decouple as d_i = -gt_i / (2 lambda)
    // once their coupling through G is moved to the right-hand side.
    double w_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) w_max = std::max(w_max, w[i]);
    const double w_floor = 1e-14 * w_max;  // relative clamp for numerically zero curvature
    std::vector<std::size_t> pos;
    pos.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] > w_floor)
        pos.push_back(i);
      else
        d[i] = -gt[i] / (2.0 * lambda);
    }
    if (!pos.empty()) {
      const std::size_t p = pos.size();
      Matrix m(p, p);
      Vector rhs(p);
      Vector sw(p);
      for (std::size_t r = 0; r < p; ++r) sw[r] = std::sqrt(w[pos[r]]);
      for (std::size_t r = 0; r < p; ++r) {
        const double* grow = g.row(pos[r]);
        for (std::size_t c = 0; c < p; ++c)
          m(r, c) = sw[r] * grow[pos[c]] * sw[c] / nd;
        m(r, r) += 2.0 * lambda;
      }
      for (std::size_t r = 0; r < p; ++r) {
        // Coupling from the clamped rows, whose d is already fixed.
        double couple = 0.0;
        const double* grow = g.row(pos[r]);
        if (pos.size() < n) {
          for (std::size_t j = 0; j < n; ++j) {
            if (w[j] <= w_floor) couple += grow[j] * d[j];
          }
        }
        rhs[r] = -gt[pos[r]] / sw[r] - sw[r] * couple / nd;
      }
      const Matrix r_factor = cholesky_upper(m);
      const Vector z = cholesky_solve(r_factor, rhs);
      for (std::size_t r = 0; r < p; ++r) d[pos[r]] = sw[r] * z[r];
    }

    gd = matvec(g, d);
    // Directional derivative of the objective along d.
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += gt[i] * gd[i];
    if (!(slope < 0.0)) {
      // Fall back to steepest descent if curvature information degenerated.
      for (std::size_t i = 0; i < n; ++i) d[i] = -grad[i];
      gd = matvec(g, d);
      slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) slope += gt[i] * gd[i];
      if (!(slope < 0.0)) {
        diag.converged = true;  // gradient numerically zero along G
        break;
      }
    }

    double step = 1.0;
    bool accepted = false;
    const double c1 = 1e-4;
    // Near the optimum the true decrease drops below the rounding error of
    // the objective itself; without this slack the line search rejects exact
    // Newton steps on noise and the iteration stalls just above tolerance.
    const double noise = 1e-14 * std::max(1.0, std::abs(obj));
    while (step > opts.step_tol) {
      for (std::size_t i = 0; i < n; ++i) {
        a_try[i] = a[i] + step * d[i];
        u_try[i] = u[i] + step * gd[i];
      }
      const double obj_try = objective_from_values(data, loss, lambda, a_try, u_try);
      if (obj_try <= obj + c1 * step * slope + noise) {
        a.swap(a_try);
        u.swap(u_try);
        obj = obj_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      diag.converged = diag.gradient_norm <= 1e-6 * std::max(1.0, std::abs(obj));
      break;
    }
  }

  if (!diag.converged) {
    // Final gradient check at the last iterate before declaring failure.
    for (std::size_t i = 0; i < n; ++i) lp[i] = dloss(loss, data.y[i], u[i]);
    for (std::size_t i = 0; i < n; ++i) gt[i] = lp[i] / nd + 2.0 * lambda * a[i];
    const double gnorm = norm2(matvec(g, gt));
    diag.gradient_norm = gnorm;
    diag.objective = objective_from_values(data, loss, lambda, a, u);
    if (gnorm <= opts.gradient_tol * std::max(1.0, std::abs(diag.objective)))
      diag.converged = true;
    else
      throw SolverFailure("fit: Newton iteration did not converge", diag.iterations, gnorm);
  }

  FittedModel model;
  model.support = data.x;
  model.coefficients = std::move(a);
  model.lambda = lambda;
  model.kernel = kernel;
  model.loss = loss;
  model.gram = std::move(g);
  model.fitted = std::move(u);
  model.diagnostics = diag;
  return model;
}

double evaluate(const FittedModel& m, std::span<const double> x) {
  if (x.size() != m.kernel.dim)
    throw ContractViolation("evaluate: point dimension does not match model");
  double v = 0.0;
  for (std::size_t i = 0; i < m.support.rows(); ++i)
    v += m.coefficients[i] * k_eval(m.kernel, m.support.row_span(i), x);
  return v;
}

Vector evaluate_many(const FittedModel& m, const Matrix& points) {
  if (points.cols() != m.kernel.dim)
    throw ContractViolation("evaluate_many: point dimension does not match model");
  Vector out(points.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(points.rows()); ++r)
    out[static_cast<std::size_t>(r)] =
        evaluate(m, points.row_span(static_cast<std::size_t>(r)));
  return out;
}

double objective(const Dataset& data, const KernelSpec& kernel, const LossSpec& loss,
                 double lambda, const Vector& coefficients) {
  if (coefficients.size() != data.size())
    throw ContractViolation("objective: coefficient length does not match data");
  const Matrix g = gram(kernel, data.x);
  const Vector u = matvec(g, coefficients);
  return objective_from_values(data, loss, lambda, coefficients, u);
}

double h_norm_sq(const FittedModel& m) {
  const Vector u = matvec(m.gram, m.coefficients);
  return dot(m.coefficients, u);
}

}  // namespace kcs

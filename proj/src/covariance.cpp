#include "kcs/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kcs/decomp.hpp"
#include "kcs/error.hpp"

namespace kcs {

namespace {

bool rows_equal(const Matrix& x, std::size_t a, std::size_t b) {
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (x(a, j) != x(b, j)) return false;
  }
  return true;
}

bool row_less(const Matrix& x, std::size_t a, std::size_t b) {
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
  }
  return false;
}

// Group exactly equal covariate rows; each group is represented by its
// smallest index.
BasisDecomposition tie_basis(const Matrix& x) {
  const std::size_t n = x.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rows_equal(x, a, b)) return a < b;
    return row_less(x, a, b);
  });
  std::vector<std::size_t> rep(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    rep[i] = (k > 0 && rows_equal(x, i, order[k - 1])) ? rep[order[k - 1]] : i;
  }
  std::vector<std::size_t> basis;
  for (std::size_t i = 0; i < n; ++i) {
    if (rep[i] == i) basis.push_back(i);
  }
  std::vector<std::size_t> pos(n, 0);
  for (std::size_t r = 0; r < basis.size(); ++r) pos[basis[r]] = r;
  BasisDecomposition out;
  out.basis_indices = std::move(basis);
  out.b = Matrix(out.basis_indices.size(), n);
  for (std::size_t i = 0; i < n; ++i) out.b(pos[rep[i]], i) = 1.0;
  return out;
}

}  // namespace

BasisDecomposition basis_decomposition(const Dataset& data, const KernelSpec& kernel,
                                       double tol) {
  validate(data);
  if (data.dim() != kernel.dim)
    throw ContractViolation("basis_decomposition: kernel dimension mismatch");
  if (kernel.family == KernelFamily::GaussianRbf) return tie_basis(data.x);

  const Matrix g = gram(kernel, data.x);
  double max_diag = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) max_diag = std::max(max_diag, g(i, i));
  const double eff_tol = tol < 0.0 ? 1e-10 * max_diag : tol;
  const PivotedCholesky pc = pivoted_cholesky(g, eff_tol);

  BasisDecomposition out;
  out.basis_indices.assign(pc.pivots.begin(), pc.pivots.begin() + pc.rank);
  std::sort(out.basis_indices.begin(), out.basis_indices.end());
  const std::size_t r = out.basis_indices.size();
  const std::size_t n = data.size();

  // Columns solve G_bb beta = G_b,i over the basis rows.
  Matrix gbb(r, r);
  for (std::size_t a = 0; a < r; ++a) {
    for (std::size_t b = 0; b < r; ++b)
      gbb(a, b) = g(out.basis_indices[a], out.basis_indices[b]);
  }
  const Matrix rf = cholesky_upper(gbb);
  out.b = Matrix(r, n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector rhs(r);
    for (std::size_t a = 0; a < r; ++a) rhs[a] = g(out.basis_indices[a], i);
    const Vector beta = cholesky_solve(rf, std::move(rhs));
    for (std::size_t a = 0; a < r; ++a) out.b(a, i) = beta[a];
  }
  for (std::size_t a = 0; a < r; ++a) {
    // Basis columns are unit coordinate vectors by definition; pin them exactly.
    for (std::size_t c = 0; c < r; ++c) out.b(c, out.basis_indices[a]) = (c == a) ? 1.0 : 0.0;
  }
  return out;
}

Matrix build_a(const Dataset& data, const FittedModel& model) {
  const std::size_t n = data.size();
  if (model.support.rows() != n || model.gram.rows() != n)
    throw ContractViolation("build_a: model was not fitted on this dataset");
  Matrix a(n, n);
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = ddloss(model.loss, data.y[i], model.fitted[i]);
    const double* grow = model.gram.row(i);
    double* arow = a.row(i);
    for (std::size_t j = 0; j < n; ++j) arow[j] = wi * grow[j] / nd;
    arow[i] += 2.0 * model.lambda;
  }
  return a;
}

CovarianceSolver::CovarianceSolver(const Dataset& data, const FittedModel& model,
                                   const BasisDecomposition& basis)
    : data_(&data), model_(&model), n_(data.size()), lambda_(model.lambda) {
  if (model.support.rows() != n_ || model.gram.rows() != n_)
    throw ContractViolation("covariance: model was not fitted on this dataset");
  if (basis.b.cols() != n_)
    throw ContractViolation("covariance: basis does not match dataset size");
  lprime_.resize(n_);
  w_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    lprime_[i] = dloss(model.loss, data.y[i], model.fitted[i]);
    w_[i] = ddloss(model.loss, data.y[i], model.fitted[i]);
  }
  double w_max = 0.0;
  for (double w : w_) w_max = std::max(w_max, w);
  const double w_floor = 1e-14 * w_max;
  const bool full_rank = basis.basis_indices.size() == n_;
  bool all_positive = w_max > 0.0;
  for (double w : w_) all_positive = all_positive && w > w_floor;

  const Matrix& g = model.gram;
  if (full_rank && all_positive) {
    // Similarity transform: A = S M S^{-1} with S = diag(sqrt(w)) and
    // M = 2*lambda*I + (1/n) S G S symmetric positive definite.
    fast_ = true;
    sw_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) sw_[i] = std::sqrt(w_[i]);
    Matrix m(n_, n_);
    const double nd = static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double* grow = g.row(i);
      double* mrow = m.row(i);
      for (std::size_t j = 0; j < n_; ++j) mrow[j] = sw_[i] * grow[j] * sw_[j] / nd;
      mrow[i] += 2.0 * lambda_;
    }
    chol_ = cholesky_upper(m);
    return;
  }

  // General path: one pseudoinverse of B A serves every functional.
  const Matrix a = build_a(data, model);
  const Matrix ba = matmul(basis.b, a);
  p_ = matmul(pinv(ba), basis.b);  // n x n
  // alpha(x_l) for all training points: columns of -1/(2 n lambda) P W G.
  Matrix wg(n_, n_);
  const double scale = -1.0 / (2.0 * static_cast<double>(n_) * lambda_);
  for (std::size_t i = 0; i < n_; ++i) {
    const double* grow = g.row(i);
    double* row = wg.row(i);
    for (std::size_t j = 0; j < n_; ++j) row[j] = scale * w_[i] * grow[j];
  }
  alpha_ = matmul(p_, wg);
}

Vector CovarianceSolver::alpha_at(std::span<const double> x) const {
  const Vector col = kernel_column(model_->kernel, model_->support, x);
  const double scale = -1.0 / (2.0 * static_cast<double>(n_) * lambda_);
  if (fast_) {
    // alpha = -1/(2 n lambda) A^{-1} W col = scale * S M^{-1} S col.
    Vector rhs(n_);
    for (std::size_t i = 0; i < n_; ++i) rhs[i] = sw_[i] * col[i];
    Vector z = cholesky_solve(chol_, std::move(rhs));
    for (std::size_t i = 0; i < n_; ++i) z[i] *= scale * sw_[i];
    return z;
  }
  Vector v(n_);
  for (std::size_t i = 0; i < n_; ++i) v[i] = w_[i] * col[i];
  Vector out = matvec(p_, v);
  for (double& e : out) e *= scale;
  return out;
}

Matrix CovarianceSolver::h_matrix(const Matrix& psi) const {
  if (psi.cols() != n_) throw ContractViolation("h_matrix: psi has wrong width");
  const std::size_t m = psi.rows();
  const double inv2l = 1.0 / (2.0 * lambda_);
  Matrix h(m, n_);
  if (fast_) {
    // Row j: h_j = psi_j/(2 lambda) + Alpha^T psi_j with Alpha^T =
    // scale G W A^{-T}; A^T = S^{-1} M S collapses the correction to
    // scale * G S M^{-1} S psi_j, one SPD solve per functional coordinate.
    const double scale = -1.0 / (2.0 * static_cast<double>(n_) * lambda_);
    const Matrix& g = model_->gram;
    for (std::size_t j = 0; j < m; ++j) {
      Vector rhs(n_);
      const double* prow = psi.row(j);
      for (std::size_t i = 0; i < n_; ++i) rhs[i] = sw_[i] * prow[i];
      Vector z = cholesky_solve(chol_, std::move(rhs));
      for (std::size_t i = 0; i < n_; ++i) z[i] = sw_[i] * z[i] * scale;
      const Vector gz = matvec(g, z);
      double* hrow = h.row(j);
      for (std::size_t l = 0; l < n_; ++l) hrow[l] = inv2l * prow[l] + gz[l];
    }
    return h;
  }
  const Matrix corr = matmul(psi, alpha_);
  for (std::size_t j = 0; j < m; ++j) {
    const double* prow = psi.row(j);
    const double* crow = corr.row(j);
    double* hrow = h.row(j);
    for (std::size_t l = 0; l < n_; ++l) hrow[l] = inv2l * prow[l] + crow[l];
  }
  return h;
}

CovarianceEstimate CovarianceSolver::estimate(const Functional& fun) const {
  const Matrix psi = psi_matrix(fun, *model_, *data_);
  const Matrix h = h_matrix(psi);
  const std::size_t m = psi.rows();
  CovarianceEstimate out;
  out.n = n_;
  out.lambda = lambda_;
  out.g_values = Matrix(n_, m);
  for (std::size_t l = 0; l < n_; ++l) {
    for (std::size_t j = 0; j < m; ++j) out.g_values(l, j) = -lprime_[l] * h(j, l);
  }
  Vector mean(m, 0.0);
  for (std::size_t l = 0; l < n_; ++l) {
    for (std::size_t j = 0; j < m; ++j) mean[j] += out.g_values(l, j);
  }
  for (std::size_t j = 0; j < m; ++j) mean[j] /= static_cast<double>(n_);
  out.sigma = Matrix(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j; k < m; ++k) {
      double s = 0.0;
      for (std::size_t l = 0; l < n_; ++l)
        s += (out.g_values(l, j) - mean[j]) * (out.g_values(l, k) - mean[k]);
      s /= static_cast<double>(n_);
      out.sigma(j, k) = s;
      out.sigma(k, j) = s;
    }
  }
  return out;
}

Vector alpha_coefficients(const Dataset& data, const FittedModel& model,
                          const BasisDecomposition& basis, std::span<const double> x) {
  return CovarianceSolver(data, model, basis).alpha_at(x);
}

Vector g_value(const Dataset& data, const FittedModel& model,
               const BasisDecomposition& basis, const Functional& fun,
               std::span<const double> x, double y) {
  const CovarianceSolver solver(data, model, basis);
  const Vector alpha = solver.alpha_at(x);
  const Vector pe = psi_prime_eval(fun, model, x);
  const Matrix psi = psi_matrix(fun, model, data);
  const double lp = dloss(model.loss, y, evaluate(model, x));
  Vector out(pe.size());
  for (std::size_t j = 0; j < pe.size(); ++j) {
    double s = pe[j] / (2.0 * model.lambda);
    const double* prow = psi.row(j);
    for (std::size_t i = 0; i < data.size(); ++i) s += alpha[i] * prow[i];
    out[j] = -lp * s;
  }
  return out;
}

CovarianceEstimate sigma_hat(const Dataset& data, const FittedModel& model,
                             const BasisDecomposition& basis, const Functional& fun) {
  return CovarianceSolver(data, model, basis).estimate(fun);
}

}  // namespace kcs

#include "kcs/matrix.hpp"

#include <cmath>
#include <cstdlib>

#include "kcs/error.hpp"

namespace kcs {

Matrix::Matrix(std::size_t rows, std::size_t cols, double value)
    : rows_(rows), cols_(cols), data_(rows * cols, value) {
  if (rows == 0 || cols == 0)
    throw ContractViolation("matrix dimensions must be positive");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

namespace {

// Row i of C depends only on row i of A and all of B; the k-j loop order
// keeps the inner loop contiguous in both B and C.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  double* ci = c.row(i);
  const double* ai = a.row(i);
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double aik = ai[k];
    const double* bk = b.row(k);
    for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
  }
}

inline double matvec_row(const Matrix& a, const Vector& x, std::size_t i) {
  return dot(a.row_span(i), {x.data(), x.size()});
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ContractViolation("matmul: shape mismatch");
  Matrix c(a.rows(), b.cols());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
  return c;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw ContractViolation("matvec: shape mismatch");
  Vector y(a.rows());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = matvec_row(a, x, i);
  return y;
}

Vector matvec_t(const Matrix& a, const Vector& x) {
  if (a.rows() != x.size()) throw ContractViolation("matvec_t: shape mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    const double* ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xi * ai[j];
  }
  return y;
}

Matrix take_rows(const Matrix& a, std::span<const std::size_t> idx) {
  Matrix r(idx.size(), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= a.rows()) throw ContractViolation("take_rows: index out of range");
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(idx[i], j);
  }
  return r;
}

Matrix submatrix(const Matrix& a, std::span<const std::size_t> row_idx,
                 std::span<const std::size_t> col_idx) {
  Matrix r(row_idx.size(), col_idx.size());
  for (std::size_t i = 0; i < row_idx.size(); ++i) {
    if (row_idx[i] >= a.rows()) throw ContractViolation("submatrix: row out of range");
    for (std::size_t j = 0; j < col_idx.size(); ++j) {
      if (col_idx[j] >= a.cols()) throw ContractViolation("submatrix: col out of range");
      r(i, j) = a(row_idx[i], col_idx[j]);
    }
  }
  return r;
}

namespace ref {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ContractViolation("matmul: shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
  return c;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw ContractViolation("matvec: shape mismatch");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = matvec_row(a, x, i);
  return y;
}

}  // namespace ref

}  // namespace kcs

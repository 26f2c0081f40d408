#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kcs {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. This is the only container the numeric
// layer works with; shape mismatches throw ContractViolation.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const double& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  std::span<const double> row_span(std::size_t i) const { return {row(i), cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool all_finite() const;

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);

Matrix transpose(const Matrix& a);

// C = A * B. Each row of C is produced by one thread with a fixed serial
// inner loop, so the result is independent of the worker count.
Matrix matmul(const Matrix& a, const Matrix& b);

// y = A * x, rows in parallel.
Vector matvec(const Matrix& a, const Vector& x);

// y = A^T * x without forming the transpose.
Vector matvec_t(const Matrix& a, const Vector& x);

Matrix take_rows(const Matrix& a, std::span<const std::size_t> idx);
Matrix submatrix(const Matrix& a, std::span<const std::size_t> row_idx,
                 std::span<const std::size_t> col_idx);

namespace ref {
// Serial twins of the parallel kernels above. Same per-element arithmetic
// order, kept as the baseline for the consistency tests and the benchmark.
Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& x);
}  // namespace ref

}  // namespace kcs

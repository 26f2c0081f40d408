#pragma once

#include <span>

#include "kcs/matrix.hpp"

namespace kcs {

enum class KernelFamily { GaussianRbf, Polynomial, Linear, Exponential };

struct KernelSpec {
  KernelFamily family = KernelFamily::GaussianRbf;
  std::size_t dim = 1;
  double gamma = 1.0;   // gaussian-rbf, exponential
  int degree = 2;       // polynomial
  double offset = 1.0;  // polynomial
  double scale = 1.0;   // polynomial

  static KernelSpec rbf(double gamma, std::size_t dim);
  static KernelSpec linear(std::size_t dim);
  static KernelSpec polynomial(int degree, double offset, double scale, std::size_t dim);
  static KernelSpec exponential(double gamma, std::size_t dim);
};

double k_eval(const KernelSpec& k, std::span<const double> x, std::span<const double> y);

// Gradient of t -> k(x, t) at t = x0.
Vector k_grad2(const KernelSpec& k, std::span<const double> x, std::span<const double> x0);

// Gram matrix of the rows of points. Entries above the diagonal are computed
// once and mirrored, so the result is exactly symmetric; rows are assigned to
// threads whole, keeping the result independent of the worker count.
Matrix gram(const KernelSpec& k, const Matrix& points);

// (k(x, p_1), ..., k(x, p_n)) over the rows of points.
Vector kernel_column(const KernelSpec& k, const Matrix& points, std::span<const double> x);

// Entry (i, j) = k(a_i, b_j) over the rows of a and b.
Matrix cross_gram(const KernelSpec& k, const Matrix& a, const Matrix& b);

namespace ref {
Matrix gram(const KernelSpec& k, const Matrix& points);
}

}  // namespace kcs

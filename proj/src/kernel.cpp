#include "kcs/kernel.hpp"

#include <cmath>

#include "kcs/error.hpp"

namespace kcs {

namespace {

void check_spec(const KernelSpec& k) {
  if (k.dim == 0) throw ContractViolation("kernel: dimension must be positive");
  switch (k.family) {
    case KernelFamily::GaussianRbf:
    case KernelFamily::Exponential:
      if (!(k.gamma > 0.0)) throw ContractViolation("kernel: gamma must be positive");
      break;
    case KernelFamily::Polynomial:
      if (k.degree < 1) throw ContractViolation("kernel: degree must be >= 1");
      if (!(k.scale > 0.0)) throw ContractViolation("kernel: scale must be positive");
      break;
    case KernelFamily::Linear:
      break;
  }
}

void check_point(const KernelSpec& k, std::span<const double> x) {
  if (x.size() != k.dim) throw ContractViolation("kernel: point dimension mismatch");
}

double sq_dist(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

}  // namespace

KernelSpec KernelSpec::rbf(double gamma, std::size_t dim) {
  KernelSpec k{KernelFamily::GaussianRbf, dim, gamma, 2, 1.0, 1.0};
  check_spec(k);
  return k;
}

KernelSpec KernelSpec::linear(std::size_t dim) {
  KernelSpec k{KernelFamily::Linear, dim, 1.0, 2, 1.0, 1.0};
  check_spec(k);
  return k;
}

KernelSpec KernelSpec::polynomial(int degree, double offset, double scale, std::size_t dim) {
  KernelSpec k{KernelFamily::Polynomial, dim, 1.0, degree, offset, scale};
  check_spec(k);
  return k;
}

KernelSpec KernelSpec::exponential(double gamma, std::size_t dim) {
  KernelSpec k{KernelFamily::Exponential, dim, gamma, 2, 1.0, 1.0};
  check_spec(k);
  return k;
}

double k_eval(const KernelSpec& k, std::span<const double> x, std::span<const double> y) {
  check_spec(k);
  check_point(k, x);
  check_point(k, y);
  switch (k.family) {
    case KernelFamily::GaussianRbf:
      return std::exp(-k.gamma * sq_dist(x, y));
    case KernelFamily::Polynomial:
      return std::pow(k.scale * dot(x, y) + k.offset, k.degree);
    case KernelFamily::Linear:
      return dot(x, y);
    case KernelFamily::Exponential:
      return std::exp(k.gamma * dot(x, y));
  }
  throw ContractViolation("kernel: unknown family");
}

Vector k_grad2(const KernelSpec& k, std::span<const double> x, std::span<const double> x0) {
  check_spec(k);
  check_point(k, x);
  check_point(k, x0);
  Vector g(k.dim);
  switch (k.family) {
    case KernelFamily::GaussianRbf: {
      const double kv = std::exp(-k.gamma * sq_dist(x, x0));
      for (std::size_t j = 0; j < k.dim; ++j) g[j] = 2.0 * k.gamma * (x[j] - x0[j]) * kv;
      return g;
    }
    case KernelFamily::Polynomial: {
      const double base = k.scale * dot(x, x0) + k.offset;
      const double factor =
          static_cast<double>(k.degree) * std::pow(base, k.degree - 1) * k.scale;
      for (std::size_t j = 0; j < k.dim; ++j) g[j] = factor * x[j];
      return g;
    }
    case KernelFamily::Linear: {
      for (std::size_t j = 0; j < k.dim; ++j) g[j] = x[j];
      return g;
    }
    case KernelFamily::Exponential: {
      const double kv = std::exp(k.gamma * dot(x, x0));
      for (std::size_t j = 0; j < k.dim; ++j) g[j] = k.gamma * x[j] * kv;
      return g;
    }
  }
  throw ContractViolation("kernel: unknown family");
}

namespace {

// One thread owns row i and writes (i, j) together with its mirror (j, i)
// for j >= i, so every entry is written exactly once.
inline void gram_row(const KernelSpec& k, const Matrix& points, Matrix& g, std::size_t i) {
  for (std::size_t j = i; j < points.rows(); ++j) {
    const double v = k_eval(k, points.row_span(i), points.row_span(j));
    g(i, j) = v;
    g(j, i) = v;
  }
}

}  // namespace

Matrix gram(const KernelSpec& k, const Matrix& points) {
  check_spec(k);
  if (points.cols() != k.dim) throw ContractViolation("gram: point dimension mismatch");
  const std::size_t n = points.rows();
  Matrix g(n, n);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) gram_row(k, points, g, i);
  return g;
}

Vector kernel_column(const KernelSpec& k, const Matrix& points, std::span<const double> x) {
  Vector col(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i)
    col[i] = k_eval(k, points.row_span(i), x);
  return col;
}

Matrix cross_gram(const KernelSpec& k, const Matrix& a, const Matrix& b) {
  Matrix g(a.rows(), b.rows());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j)
      g(i, j) = k_eval(k, a.row_span(i), b.row_span(j));
  return g;
}

namespace ref {

Matrix gram(const KernelSpec& k, const Matrix& points) {
  check_spec(k);
  if (points.cols() != k.dim) throw ContractViolation("gram: point dimension mismatch");
  const std::size_t n = points.rows();
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) gram_row(k, points, g, i);
  return g;
}

}  // namespace ref

}  // namespace kcs

#include "kcs/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kcs/error.hpp"
#include "kcs/rng.hpp"

namespace kcs {

Vector constrain_grid(const Vector& grid, double lambda0, double c, std::size_t n) {
  if (!(lambda0 > 0.0)) throw ContractViolation("constrain_grid: lambda0 must be positive");
  if (!(c >= 0.0)) throw ContractViolation("constrain_grid: c must be nonnegative");
  if (n < 2) throw ContractViolation("constrain_grid: need n >= 2");
  const double upper =
      lambda0 + c / std::sqrt(static_cast<double>(n) * std::log(static_cast<double>(n)));
  Vector out{lambda0};
  for (double v : grid) {
    if (v >= lambda0 && v <= upper) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CvResult cv_select(const Dataset& data, const KernelSpec& kernel, const LossSpec& loss,
                   const Vector& grid, std::size_t folds, std::uint64_t seed,
                   const Matrix* full_gram) {
  validate(data);
  if (grid.empty()) throw ContractViolation("cv_select: empty grid");
  if (folds < 2) throw ContractViolation("cv_select: need at least 2 folds");
  const std::size_t n = data.size();
  if (folds > n) throw ContractViolation("cv_select: more folds than observations");
  for (double l : grid) {
    if (!(l > 0.0)) throw ContractViolation("cv_select: grid values must be positive");
  }
  if (full_gram != nullptr && (full_gram->rows() != n || full_gram->cols() != n))
    throw ContractViolation("cv_select: precomputed Gram matrix has wrong shape");

  CvResult result;
  result.grid = grid;
  std::sort(result.grid.begin(), result.grid.end());
  result.grid.erase(std::unique(result.grid.begin(), result.grid.end()), result.grid.end());
  const std::size_t g = result.grid.size();

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i-- > 1;) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
    std::swap(perm[i], perm[j]);
  }

  Vector total_loss(g, 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * n / folds;
    const std::size_t hi = (f + 1) * n / folds;
    std::vector<std::size_t> test(perm.begin() + lo, perm.begin() + hi);
    std::vector<std::size_t> train;
    train.reserve(n - test.size());
    std::vector<bool> held(n, false);
    for (std::size_t i : test) held[i] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!held[i]) train.push_back(i);
    }

    const Dataset sub = take(data, train);
    Matrix sub_gram(1, 1);
    if (full_gram != nullptr) {
      sub_gram = Matrix(train.size(), train.size());
      for (std::size_t a = 0; a < train.size(); ++a) {
        for (std::size_t b = 0; b < train.size(); ++b)
          sub_gram(a, b) = (*full_gram)(train[a], train[b]);
      }
    } else {
      sub_gram = gram(kernel, sub.x);
    }

    Vector warm;
    for (std::size_t k = 0; k < g; ++k) {
      FitOptions opts;
      opts.gram = &sub_gram;
      if (!warm.empty()) opts.warm_start = &warm;
      FittedModel model;
      try {
        model = fit(sub, kernel, loss, result.grid[k], opts);
      } catch (const SolverFailure& e) {
        throw SolverFailure(
            "cv_select: fold " + std::to_string(f) + ", lambda " +
                std::to_string(result.grid[k]) + ": " + e.what(),
            e.iterations, e.gradient_norm);
      }
      warm = model.coefficients;
      for (std::size_t j : test) {
        double pred = 0.0;
        if (full_gram != nullptr) {
          for (std::size_t a = 0; a < train.size(); ++a)
            pred += model.coefficients[a] * (*full_gram)(train[a], j);
        } else {
          pred = evaluate(model, data.x.row_span(j));
        }
        total_loss[k] += kcs::loss(loss, data.y[j], pred);
      }
    }
  }

  result.losses.resize(g);
  std::size_t best = 0;
  for (std::size_t k = 0; k < g; ++k) {
    result.losses[k] = total_loss[k] / static_cast<double>(n);
    if (result.losses[k] < result.losses[best]) best = k;
  }
  result.lambda = result.grid[best];
  return result;
}

}  // namespace kcs

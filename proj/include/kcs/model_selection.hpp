#pragma once

#include <cstdint>

#include "kcs/solver.hpp"

namespace kcs {

// Grid values inside [lambda0, lambda0 + c / sqrt(n ln n)], ascending and
// deduplicated; lambda0 itself is always a member.
Vector constrain_grid(const Vector& grid, double lambda0, double c, std::size_t n);

struct CvResult {
  double lambda = 0.0;  // selected value, ties broken toward the smallest
  Vector grid;          // evaluated grid, ascending and deduplicated
  Vector losses;        // mean held-out loss per grid value
};

// K-fold cross-validation: indices are shuffled once with the seed, split
// into contiguous folds of near-equal size, and each grid value is scored by
// the mean unregularized loss over all held-out points. Within a fold, fits
// warm-start from the previous grid value's coefficients. An optional
// precomputed full Gram matrix avoids refactoring kernel evaluations.
CvResult cv_select(const Dataset& data, const KernelSpec& kernel, const LossSpec& loss,
                   const Vector& grid, std::size_t folds, std::uint64_t seed,
                   const Matrix* full_gram = nullptr);

}  // namespace kcs

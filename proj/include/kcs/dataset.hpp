#pragma once

#include "kcs/loss.hpp"
#include "kcs/matrix.hpp"

namespace kcs {

enum class Task { Regression, Classification };

struct Dataset {
  Matrix x;  // n x d covariates
  Vector y;  // n responses
  Task task = Task::Regression;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return x.cols(); }
};

// Shape agreement, finite entries, and {-1, +1} labels for classification.
void validate(const Dataset& data);

Dataset take(const Dataset& data, std::span<const std::size_t> idx);

}  // namespace kcs

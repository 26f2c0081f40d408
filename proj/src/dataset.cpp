#include "kcs/dataset.hpp"

#include <cmath>

#include "kcs/error.hpp"

namespace kcs {

void validate(const Dataset& data) {
  if (data.x.rows() != data.y.size())
    throw ContractViolation("dataset: covariate and response counts differ");
  if (data.x.rows() == 0) throw ContractViolation("dataset: empty");
  if (!data.x.all_finite()) throw ContractViolation("dataset: nonfinite covariate");
  for (double v : data.y) {
    if (!std::isfinite(v)) throw ContractViolation("dataset: nonfinite response");
    if (data.task == Task::Classification && v != 1.0 && v != -1.0)
      throw ContractViolation("dataset: classification labels must be -1 or +1");
  }
}

Dataset take(const Dataset& data, std::span<const std::size_t> idx) {
  Dataset out;
  out.task = data.task;
  out.x = take_rows(data.x, idx);
  out.y.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out.y[i] = data.y[idx[i]];
  return out;
}

}  // namespace kcs

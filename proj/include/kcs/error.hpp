#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kcs {

// Caller broke a documented precondition (bad shape, bad parameter, bad label).
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An iterative numeric routine ran out of iterations.
struct NumericFailure : std::runtime_error {
  NumericFailure(const std::string& msg, std::size_t iters)
      : std::runtime_error(msg), iterations(iters) {}
  std::size_t iterations;
};

// The Newton solve stopped without meeting its tolerances.
struct SolverFailure : std::runtime_error {
  SolverFailure(const std::string& msg, std::size_t iters, double grad_norm)
      : std::runtime_error(msg), iterations(iters), gradient_norm(grad_norm) {}
  std::size_t iterations;
  double gradient_norm;
};

// The covariance estimate is numerically rank deficient.
struct DegenerateCovariance : std::runtime_error {
  DegenerateCovariance(const std::string& msg, double min_eig)
      : std::runtime_error(msg), min_eigenvalue(min_eig) {}
  double min_eigenvalue;
};

// An evaluation point lies outside the region where the requested quantity
// is defined (e.g. a gradient at a point outside the covariate range).
struct DomainWarning : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A text input (config or CSV) failed to parse; line is 1-based, 0 if unknown.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::string file_, std::size_t line_)
      : std::runtime_error(msg), file(std::move(file_)), line(line_) {}
  std::string file;
  std::size_t line;
};

}  // namespace kcs

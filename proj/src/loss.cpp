#include "kcs/loss.hpp"

#include <cmath>

#include "kcs/error.hpp"

namespace kcs {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// 1 / cosh(x)^2 without overflowing for large |x|.
double sech_sq(double x) {
  const double e = std::exp(-std::fabs(x));
  const double e2 = e * e;
  const double denom = 1.0 + e2;
  return 4.0 * e2 / (denom * denom);
}

}  // namespace

LossSpec LossSpec::ls_regression() { return {LossFamily::LsRegression, 1.0}; }

LossSpec LossSpec::logistic_regression(double sigma) {
  if (!(sigma > 0.0)) throw ContractViolation("loss: sigma must be positive");
  return {LossFamily::LogisticRegression, sigma};
}

LossSpec LossSpec::ls_classification() { return {LossFamily::LsClassification, 1.0}; }

LossSpec LossSpec::logistic_classification() {
  return {LossFamily::LogisticClassification, 1.0};
}

LossSpec LossSpec::logistic_classification_diff() {
  return {LossFamily::LogisticClassificationDiff, 1.0};
}

bool LossSpec::classification() const {
  return family == LossFamily::LsClassification ||
         family == LossFamily::LogisticClassification ||
         family == LossFamily::LogisticClassificationDiff;
}

void check_response(const LossSpec& spec, double y) {
  if (!std::isfinite(y)) throw ContractViolation("loss: response not finite");
  if (spec.classification() && y != 1.0 && y != -1.0)
    throw ContractViolation("loss: classification labels must be -1 or +1");
}

double loss(const LossSpec& spec, double y, double t) {
  switch (spec.family) {
    case LossFamily::LsRegression: {
      const double r = y - t;
      return r * r;
    }
    case LossFamily::LogisticRegression: {
      const double u = (y - t) / spec.sigma;
      return spec.sigma * (2.0 * softplus(u) - u - std::log(4.0));
    }
    case LossFamily::LsClassification: {
      const double r = 1.0 - y * t;
      return r * r;
    }
    case LossFamily::LogisticClassification:
      return softplus(-y * t);
    case LossFamily::LogisticClassificationDiff:
      return softplus(y - t);
  }
  throw ContractViolation("loss: unknown family");
}

double dloss(const LossSpec& spec, double y, double t) {
  switch (spec.family) {
    case LossFamily::LsRegression:
      return -2.0 * (y - t);
    case LossFamily::LogisticRegression:
      return -std::tanh((y - t) / (2.0 * spec.sigma));
    case LossFamily::LsClassification:
      return -2.0 * y * (1.0 - y * t);
    case LossFamily::LogisticClassification:
      return -y * sigmoid(-y * t);
    case LossFamily::LogisticClassificationDiff:
      return -sigmoid(y - t);
  }
  throw ContractViolation("loss: unknown family");
}

double ddloss(const LossSpec& spec, double y, double t) {
  switch (spec.family) {
    case LossFamily::LsRegression:
      return 2.0;
    case LossFamily::LogisticRegression:
      return sech_sq((y - t) / (2.0 * spec.sigma)) / (2.0 * spec.sigma);
    case LossFamily::LsClassification:
      return 2.0;
    case LossFamily::LogisticClassification:
      return sigmoid(y * t) * sigmoid(-y * t);
    case LossFamily::LogisticClassificationDiff:
      return sigmoid(y - t) * sigmoid(t - y);
  }
  throw ContractViolation("loss: unknown family");
}

}  // namespace kcs

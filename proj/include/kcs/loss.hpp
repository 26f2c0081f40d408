#pragma once

namespace kcs {

enum class LossFamily {
  LsRegression,                // (y - t)^2
  LogisticRegression,          // scaled logistic density loss, parameter sigma
  LsClassification,            // (1 - y t)^2, labels in {-1, +1}
  LogisticClassification,      // log(1 + exp(-y t)), labels in {-1, +1}
  LogisticClassificationDiff,  // log(1 + exp(y - t)) difference form
};

struct LossSpec {
  LossFamily family = LossFamily::LsRegression;
  double sigma = 1.0;  // LogisticRegression scale

  static LossSpec ls_regression();
  static LossSpec logistic_regression(double sigma);
  static LossSpec ls_classification();
  static LossSpec logistic_classification();
  static LossSpec logistic_classification_diff();

  bool classification() const;
};

// Classification labels must be exactly -1 or +1; regression accepts any
// finite response.
void check_response(const LossSpec& spec, double y);

// Loss and its first two derivatives in the margin/prediction argument t.
double loss(const LossSpec& spec, double y, double t);
double dloss(const LossSpec& spec, double y, double t);
double ddloss(const LossSpec& spec, double y, double t);

}  // namespace kcs

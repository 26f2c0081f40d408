#pragma once

#include <string>

#include "kcs/confidence.hpp"
#include "kcs/model_selection.hpp"

namespace kcs {

enum class Scenario { Univariate, Bivariate };

// Regression function of the synthetic scenarios:
// univariate f0(x) = log(x+2) + 0.7 sin(3x) + 0.7 cos(2x) with X ~ U[0,5];
// bivariate adds sin(1.5 x2) with X2 ~ U[-1,1]. Noise is standard normal.
double true_regression(Scenario s, std::span<const double> x);

Dataset gen_univariate(std::size_t n, std::uint64_t seed);
Dataset gen_bivariate(std::size_t n, std::uint64_t seed);
Dataset gen_scenario(Scenario s, std::size_t n, std::uint64_t seed);

// The lambda grid used by the reproduction studies.
Vector default_lambda_grid();

// Scenario defaults: RBF gamma (0.5 univariate, 1/3 bivariate), loss scale 0.5.
double default_gamma(Scenario s);

struct SimConfig {
  Scenario scenario = Scenario::Univariate;
  std::size_t n = 500;
  std::size_t replications = 500;
  double alpha = 0.05;
  double lambda0 = 1e-5;
  Vector grid = default_lambda_grid();
  double gamma = 0.5;
  double loss_sigma = 0.5;
  std::vector<Functional> functionals;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t cv_folds = 5;
  bool constrain = false;    // restrict the grid to [lambda0, lambda0 + c/sqrt(n ln n)]
  double constraint_c = 1.0;
  std::size_t oracle_n = 0;  // 0 selects max(100 n, 50000)
  double oracle_margin = 0.01;
};

// Large-sample stand-in for the population minimizer at lambda0: the fit is
// restricted to a fixed landmark grid spanning the covariate domain (the RBF
// span of a fine grid carries the minimizer to well below sampling error),
// which keeps the oracle solvable at sample sizes where a full representer
// fit would not fit in memory.
FittedModel reference_model(Scenario s, double lambda0, double gamma, double loss_sigma,
                            std::size_t oracle_n, std::uint64_t seed);

struct OracleTarget {
  Vector value;              // average over the two oracle seeds
  double discrepancy = 0.0;  // max absolute disagreement between the seeds
  bool stable = false;       // discrepancy within the margin
};

// psi(f_{P,lambda0}) approximated by two independent large-sample fits with
// scenario-default kernel and loss parameters.
OracleTarget reference_target(Scenario s, double lambda0, const Functional& fun,
                              std::size_t oracle_n, std::uint64_t seed,
                              double margin = 0.01);

struct ReplicationRecord {
  std::size_t index = 0;
  bool failed = false;  // shared stage (fit/CV/covariance) failed
  std::string error;
  double lambda = 0.0;
  std::vector<unsigned char> ok;       // per functional
  std::vector<unsigned char> covered;  // per functional
  Vector length;                       // per functional: full longest-axis length
  std::vector<Vector> sigma_diag;      // per functional: diagonal of sigma_hat
};

struct FunctionalSummary {
  std::size_t m = 1;
  OracleTarget target;
  std::size_t completed = 0;
  std::size_t covered = 0;
  double coverage = 0.0;
  double binomial_margin = 0.0;  // 1.96 sqrt(p(1-p)/completed)
  double mean_length = 0.0;
  double sd_length = 0.0;
};

struct CoverageReport {
  std::vector<FunctionalSummary> functionals;
  std::vector<ReplicationRecord> replications;
  std::size_t failures = 0;
  std::size_t oracle_n = 0;
};

// Per replication: generate data, select lambda by CV, fit, estimate the
// covariance, build the confidence set for each functional, and test whether
// it contains the reference target. Replications use independent split RNG
// streams keyed by index, so results do not depend on the worker count.
CoverageReport coverage_experiment(const SimConfig& cfg);

struct BandRow {
  Vector x;
  double center = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double sigma = 0.0;
  bool degenerate = false;  // variance too small for a meaningful interval
};

// Pointwise interval at every grid row (not a simultaneous band).
std::vector<BandRow> band_data(const Dataset& data, const FittedModel& model,
                               const BasisDecomposition& basis, const Matrix& grid,
                               double alpha);

}  // namespace kcs

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "kcs/simulation.hpp"
#include "kcs/solver.hpp"
#include "kcs/special.hpp"

using namespace kcs;

TEST_CASE("univariate regression function pinned values") {
  CHECK(true_regression(Scenario::Univariate, Vector{0.0}) ==
        doctest::Approx(std::log(2.0) + 0.7).epsilon(1e-15));
  const double f3 = std::log(5.0) + 0.7 * std::sin(9.0) + 0.7 * std::cos(6.0);
  CHECK(true_regression(Scenario::Univariate, Vector{3.0}) == doctest::Approx(f3).epsilon(1e-15));
}

TEST_CASE("bivariate regression function pinned values") {
  CHECK(true_regression(Scenario::Bivariate, Vector{0.0, 0.0}) ==
        doctest::Approx(std::log(2.0) + 0.7).epsilon(1e-15));
  const double f = std::log(3.0) + 0.7 * std::sin(3.0) + 0.7 * std::cos(2.0) + std::sin(1.5 * 0.5);
  CHECK(true_regression(Scenario::Bivariate, Vector{1.0, 0.5}) == doctest::Approx(f).epsilon(1e-14));
}

TEST_CASE("data generation is deterministic in the seed") {
  Dataset a = gen_univariate(50, 7);
  Dataset b = gen_univariate(50, 7);
  Dataset c = gen_univariate(50, 8);
  REQUIRE(a.size() == 50);
  bool identical = true, differs = false;
  for (std::size_t i = 0; i < 50; ++i) {
    identical = identical && a.x(i, 0) == b.x(i, 0) && a.y[i] == b.y[i];
    differs = differs || a.x(i, 0) != c.x(i, 0);
  }
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("covariates respect the scenario domains") {
  Dataset u = gen_univariate(400, 3);
  for (std::size_t i = 0; i < 400; ++i) {
    CHECK(u.x(i, 0) >= 0.0);
    CHECK(u.x(i, 0) <= 5.0);
  }
  Dataset b = gen_bivariate(400, 3);
  REQUIRE(b.dim() == 2);
  for (std::size_t i = 0; i < 400; ++i) {
    CHECK(b.x(i, 0) >= 0.0);
    CHECK(b.x(i, 0) <= 5.0);
    CHECK(b.x(i, 1) >= -1.0);
    CHECK(b.x(i, 1) <= 1.0);
  }
}

TEST_CASE("responses are the regression function plus standard normal noise") {
  Dataset u = gen_scenario(Scenario::Univariate, 4000, 11);
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < 4000; ++i)
    mean += u.y[i] - true_regression(Scenario::Univariate, u.x.row_span(i));
  mean /= 4000.0;
  for (std::size_t i = 0; i < 4000; ++i) {
    const double r = u.y[i] - true_regression(Scenario::Univariate, u.x.row_span(i)) - mean;
    var += r * r;
  }
  var /= 3999.0;
  CHECK(std::abs(mean) < 0.06);
  CHECK(var == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("study defaults match the scenario parameters") {
  const Vector grid = default_lambda_grid();
  REQUIRE(grid.size() == 7);
  CHECK(grid.front() == 1e-5);
  CHECK(grid.back() == 1e-2);
  CHECK(default_gamma(Scenario::Univariate) == 0.5);
  CHECK(default_gamma(Scenario::Bivariate) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("heavy regularization drives the reference model to zero") {
  FittedModel m = reference_model(Scenario::Univariate, 1e6, 0.5, 0.5, 2000, 42);
  for (double x : {0.0, 1.5, 3.0, 4.5}) CHECK(std::abs(evaluate(m, Vector{x})) < 1e-3);
}

TEST_CASE("reference target approximates the true regression at interior points") {
  OracleTarget t = reference_target(Scenario::Univariate, 1e-5,
                                    Functional::pointwise(Matrix(1, 1, 3.0)), 50000, 1);
  const double f3 = std::log(5.0) + 0.7 * std::sin(9.0) + 0.7 * std::cos(6.0);
  REQUIRE(t.value.size() == 1);
  CHECK(std::abs(t.value[0] - f3) < 0.1);
  // Two independent oracle draws disagree by a sampling-order amount; the
  // stability flag reflects the requested margin.
  CHECK(t.discrepancy > 1e-4);
  CHECK(t.discrepancy < 0.05);
  OracleTarget loose = reference_target(Scenario::Univariate, 1e-5,
                                        Functional::pointwise(Matrix(1, 1, 3.0)), 50000, 1, 0.05);
  CHECK(loose.stable);
  OracleTarget tight = reference_target(Scenario::Univariate, 1e-5,
                                        Functional::pointwise(Matrix(1, 1, 3.0)), 50000, 1, 1e-4);
  CHECK_FALSE(tight.stable);
}

namespace {

SimConfig small_config() {
  SimConfig cfg;
  cfg.scenario = Scenario::Univariate;
  cfg.n = 60;
  cfg.replications = 12;
  cfg.alpha = 0.05;
  cfg.grid = Vector{1e-3};
  cfg.gamma = 0.5;
  cfg.loss_sigma = 0.5;
  cfg.seed = 5;
  cfg.workers = 1;
  cfg.oracle_n = 2000;
  cfg.oracle_margin = 1.0;
  cfg.functionals.push_back(Functional::pointwise(Matrix(1, 1, 3.0)));
  Matrix two(2, 1);
  two(0, 0) = 1.0;
  two(1, 0) = 4.0;
  cfg.functionals.push_back(Functional::pointwise(two));
  return cfg;
}

}  // namespace

TEST_CASE("coverage experiment bookkeeping is consistent") {
  SimConfig cfg = small_config();
  CoverageReport rep = coverage_experiment(cfg);
  REQUIRE(rep.replications.size() == 12);
  REQUIRE(rep.functionals.size() == 2);
  CHECK(rep.failures == 0);
  CHECK(rep.oracle_n == 2000);
  for (std::size_t f = 0; f < 2; ++f) {
    const FunctionalSummary& s = rep.functionals[f];
    CHECK(s.m == (f == 0 ? 1 : 2));
    CHECK(s.completed == 12);
    std::size_t covered = 0;
    double sum_len = 0.0;
    for (const ReplicationRecord& r : rep.replications) {
      REQUIRE(r.ok.size() == 2);
      CHECK(r.ok[f] == 1);
      covered += r.covered[f];
      CHECK(r.length[f] > 0.0);
      sum_len += r.length[f];
      CHECK(r.lambda == 1e-3);  // singleton grid
      REQUIRE(r.sigma_diag[f].size() == s.m);
      for (double v : r.sigma_diag[f]) CHECK(v > 0.0);
    }
    CHECK(s.covered == covered);
    CHECK(s.coverage == doctest::Approx(covered / 12.0).epsilon(1e-15));
    CHECK(s.binomial_margin ==
          doctest::Approx(1.96 * std::sqrt(s.coverage * (1 - s.coverage) / 12.0)).epsilon(1e-12));
    CHECK(s.mean_length == doctest::Approx(sum_len / 12.0).epsilon(1e-12));
    CHECK(s.sd_length >= 0.0);
    CHECK(s.target.stable);
  }
}

TEST_CASE("coverage experiment is deterministic in the seed") {
  SimConfig cfg = small_config();
  cfg.replications = 6;
  CoverageReport a = coverage_experiment(cfg);
  CoverageReport b = coverage_experiment(cfg);
  for (std::size_t r = 0; r < 6; ++r) {
    CHECK(a.replications[r].lambda == b.replications[r].lambda);
    for (std::size_t f = 0; f < 2; ++f) {
      CHECK(a.replications[r].covered[f] == b.replications[r].covered[f]);
      CHECK(a.replications[r].length[f] == b.replications[r].length[f]);
    }
  }
}

TEST_CASE("near-unit alpha shrinks the sets until coverage collapses") {
  SimConfig cfg = small_config();
  cfg.replications = 6;
  cfg.alpha = 0.999;
  cfg.functionals.pop_back();
  CoverageReport rep = coverage_experiment(cfg);
  CHECK(rep.functionals[0].completed == 6);
  CHECK(rep.functionals[0].coverage <= 0.2);
}

TEST_CASE("per-functional degeneracy is recorded without failing the replication") {
  SimConfig cfg = small_config();
  cfg.replications = 4;
  Matrix dup(2, 1, 3.0);  // duplicated evaluation point: singular covariance
  cfg.functionals.push_back(Functional::pointwise(dup));
  CoverageReport rep = coverage_experiment(cfg);
  CHECK(rep.failures == 0);
  CHECK(rep.functionals[0].completed == 4);
  CHECK(rep.functionals[1].completed == 4);
  CHECK(rep.functionals[2].completed == 0);
  CHECK(rep.functionals[2].coverage == 0.0);
  CHECK(rep.functionals[2].binomial_margin == 0.0);
  for (const ReplicationRecord& r : rep.replications) {
    CHECK_FALSE(r.failed);
    CHECK(r.ok[2] == 0);
    CHECK_FALSE(r.error.empty());
  }
}

TEST_CASE("band rows at a single point reproduce the one-dimensional interval") {
  Dataset data = gen_univariate(50, 9);
  const KernelSpec kernel = KernelSpec::rbf(0.5, 1);
  FittedModel model = fit(data, kernel, LossSpec::ls_regression(), 1e-3);
  BasisDecomposition basis = basis_decomposition(data, kernel);

  Matrix grid(1, 1, 2.5);
  std::vector<BandRow> rows = band_data(data, model, basis, grid, 0.05);
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].degenerate);
  CHECK(rows[0].center == doctest::Approx(evaluate(model, Vector{2.5})).epsilon(1e-12));

  const Functional fun = Functional::pointwise(grid);
  CovarianceEstimate est = sigma_hat(data, model, basis, fun);
  ConfidenceEllipsoid ell = build_ellipsoid(psi_value(fun, model), est, 50, 0.05);
  auto [lo, hi] = interval(ell);
  CHECK(rows[0].lo == doctest::Approx(lo).epsilon(1e-10));
  CHECK(rows[0].hi == doctest::Approx(hi).epsilon(1e-10));
  CHECK(rows[0].sigma == doctest::Approx(est.sigma(0, 0)).epsilon(1e-12));
}

TEST_CASE("band rows bracket the fitted curve") {
  Dataset data = gen_univariate(60, 10);
  const KernelSpec kernel = KernelSpec::rbf(0.5, 1);
  FittedModel model = fit(data, kernel, LossSpec::ls_regression(), 1e-3);
  BasisDecomposition basis = basis_decomposition(data, kernel);
  Matrix grid(11, 1);
  for (std::size_t i = 0; i < 11; ++i) grid(i, 0) = 0.5 * static_cast<double>(i);
  std::vector<BandRow> rows = band_data(data, model, basis, grid, 0.05);
  REQUIRE(rows.size() == 11);
  for (const BandRow& r : rows) {
    CHECK(r.center == doctest::Approx(evaluate(model, r.x)).epsilon(1e-12));
    if (!r.degenerate) {
      CHECK(r.lo < r.center);
      CHECK(r.center < r.hi);
      CHECK(r.hi - r.lo ==
            doctest::Approx(2 * std::sqrt(chi_squared_quantile(1, 0.05) * r.sigma / 60.0))
                .epsilon(1e-10));
    }
  }
}

TEST_CASE("identically zero responses make every band row degenerate") {
  Dataset data = gen_univariate(30, 12);
  data.y.assign(30, 0.0);
  const KernelSpec kernel = KernelSpec::rbf(0.5, 1);
  FittedModel model = fit(data, kernel, LossSpec::ls_regression(), 1e-2);
  BasisDecomposition basis = basis_decomposition(data, kernel);
  Matrix grid(3, 1);
  grid(0, 0) = 1.0;
  grid(1, 0) = 2.0;
  grid(2, 0) = 3.0;
  std::vector<BandRow> rows = band_data(data, model, basis, grid, 0.05);
  for (const BandRow& r : rows) {
    CHECK(r.degenerate);
    CHECK(r.lo == r.center);
    CHECK(r.hi == r.center);
  }
}

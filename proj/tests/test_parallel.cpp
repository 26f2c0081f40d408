#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kcs/rng.hpp"
#include "kcs/simulation.hpp"
#include "kcs/solver.hpp"

using namespace kcs;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.next_normal();
  return m;
}

}  // namespace

TEST_CASE("parallel matrix product equals the serial reference bit for bit") {
  Rng rng(71);
  for (auto [r, k, c] : {std::tuple<int, int, int>{37, 23, 41}, {64, 64, 64}, {1, 50, 1}}) {
    Matrix a = random_matrix(r, k, rng);
    Matrix b = random_matrix(k, c, rng);
    Matrix p = matmul(a, b);
    Matrix s = ref::matmul(a, b);
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) CHECK(p(i, j) == s(i, j));
  }
}

TEST_CASE("parallel matrix-vector product equals the serial reference bit for bit") {
  Rng rng(72);
  Matrix a = random_matrix(83, 47, rng);
  Vector x(47);
  for (double& v : x) v = rng.next_normal();
  Vector p = matvec(a, x);
  Vector s = ref::matvec(a, x);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == s[i]);
}

TEST_CASE("parallel Gram construction equals the serial reference bit for bit") {
  Rng rng(73);
  for (const KernelSpec& k :
       {KernelSpec::rbf(0.5, 3), KernelSpec::linear(3), KernelSpec::polynomial(2, 1.0, 0.5, 3),
        KernelSpec::exponential(0.7, 3)}) {
    Matrix pts = random_matrix(60, 3, rng);
    Matrix p = gram(k, pts);
    Matrix s = ref::gram(k, pts);
    for (std::size_t i = 0; i < 60; ++i)
      for (std::size_t j = 0; j < 60; ++j) CHECK(p(i, j) == s(i, j));
  }
}

TEST_CASE("batch evaluation equals pointwise evaluation bit for bit") {
  Rng rng(74);
  Dataset data = gen_univariate(80, 17);
  FittedModel m = fit(data, KernelSpec::rbf(0.5, 1), LossSpec::ls_regression(), 1e-3);
  Matrix pts = random_matrix(50, 1, rng);
  Vector batch = evaluate_many(m, pts);
  for (std::size_t i = 0; i < 50; ++i) CHECK(batch[i] == evaluate(m, pts.row_span(i)));
}

TEST_CASE("coverage experiment is invariant to the worker count") {
  SimConfig cfg;
  cfg.scenario = Scenario::Univariate;
  cfg.n = 60;
  cfg.replications = 10;
  cfg.alpha = 0.05;
  cfg.grid = Vector{1e-3, 1e-2};
  cfg.gamma = 0.5;
  cfg.seed = 13;
  cfg.oracle_n = 2000;
  cfg.oracle_margin = 1.0;
  cfg.functionals.push_back(Functional::pointwise(Matrix(1, 1, 3.0)));
  Matrix two(2, 1);
  two(0, 0) = 1.0;
  two(1, 0) = 4.0;
  cfg.functionals.push_back(Functional::pointwise(two));

  cfg.workers = 1;
  CoverageReport serial = coverage_experiment(cfg);
  cfg.workers = 4;
  CoverageReport parallel = coverage_experiment(cfg);

  REQUIRE(serial.replications.size() == parallel.replications.size());
  for (std::size_t r = 0; r < serial.replications.size(); ++r) {
    const ReplicationRecord& a = serial.replications[r];
    const ReplicationRecord& b = parallel.replications[r];
    CHECK(a.index == b.index);
    CHECK(a.failed == b.failed);
    CHECK(a.lambda == b.lambda);
    for (std::size_t f = 0; f < 2; ++f) {
      CHECK(a.ok[f] == b.ok[f]);
      CHECK(a.covered[f] == b.covered[f]);
      CHECK(a.length[f] == b.length[f]);
      REQUIRE(a.sigma_diag[f].size() == b.sigma_diag[f].size());
      for (std::size_t j = 0; j < a.sigma_diag[f].size(); ++j)
        CHECK(a.sigma_diag[f][j] == b.sigma_diag[f][j]);
    }
  }
  for (std::size_t f = 0; f < 2; ++f) {
    CHECK(serial.functionals[f].coverage == parallel.functionals[f].coverage);
    CHECK(serial.functionals[f].mean_length == parallel.functionals[f].mean_length);
    CHECK(serial.functionals[f].sd_length == parallel.functionals[f].sd_length);
    CHECK(serial.functionals[f].target.value[0] == parallel.functionals[f].target.value[0]);
  }
  CHECK(serial.failures == parallel.failures);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "kcs/error.hpp"
#include "kcs/model_selection.hpp"
#include "kcs/rng.hpp"
#include "kcs/simulation.hpp"

using namespace kcs;

namespace {

Dataset noisy_data(std::size_t n, Rng& rng, double noise = 1.0) {
  Dataset data;
  data.x = Matrix(n, 1);
  data.y = Vector(n);
  for (std::size_t i = 0; i < n; ++i) {
    data.x(i, 0) = 5.0 * rng.next_uniform();
    data.y[i] = std::sin(data.x(i, 0)) + noise * rng.next_normal();
  }
  return data;
}

}  // namespace

TEST_CASE("zero window width collapses the grid to lambda0") {
  Vector grid{1e-4, 1e-3, 1e-2};
  Vector out = constrain_grid(grid, 1e-5, 0.0, 500);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == 1e-5);
}

TEST_CASE("grid entirely above the window still yields lambda0") {
  Vector grid{10.0, 100.0};
  Vector out = constrain_grid(grid, 1e-5, 1.0, 500);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == 1e-5);
}

TEST_CASE("study grid survives the shrinking window at n = 1000") {
  const double lambda0 = 1e-5, c = 1.0;
  const std::size_t n = 1000;
  const double upper = lambda0 + c / std::sqrt(1000.0 * std::log(1000.0));
  CHECK(upper == doctest::Approx(1e-5 + 0.0120318).epsilon(1e-4));
  Vector out = constrain_grid(default_lambda_grid(), lambda0, c, n);
  // Every study value lies inside the window and lambda0 leads the list.
  REQUIRE(out.size() == 7);
  CHECK(out.front() == lambda0);
  for (double v : {1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2})
    CHECK(std::find(out.begin(), out.end(), v) != out.end());
  CHECK(std::is_sorted(out.begin(), out.end()));
}

TEST_CASE("values below lambda0 are excluded") {
  Vector grid{1e-7, 1e-6, 1e-4};
  Vector out = constrain_grid(grid, 1e-5, 1.0, 100);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == 1e-5);
  CHECK(out[1] == 1e-4);
}

TEST_CASE("constraint parameters are validated") {
  Vector grid{1e-4};
  CHECK_THROWS_AS(constrain_grid(grid, 0.0, 1.0, 100), ContractViolation);
  CHECK_THROWS_AS(constrain_grid(grid, 1e-5, -1.0, 100), ContractViolation);
  CHECK_THROWS_AS(constrain_grid(grid, 1e-5, 1.0, 1), ContractViolation);
}

TEST_CASE("singleton grid is returned unchanged") {
  Rng rng(51);
  Dataset data = noisy_data(30, rng);
  CvResult res = cv_select(data, KernelSpec::rbf(0.5, 1), LossSpec::ls_regression(),
                           Vector{3e-3}, 5, 7);
  CHECK(res.lambda == 3e-3);
  REQUIRE(res.grid.size() == 1);
  REQUIRE(res.losses.size() == 1);
  CHECK(res.losses[0] > 0.0);
}

TEST_CASE("pure-noise responses favor heavy regularization") {
  // With no signal, the held-out loss of a near-interpolating fit exceeds the
  // loss of the heavily smoothed one, so the large lambda wins most seeds.
  std::size_t big_wins = 0;
  const Vector grid{1e-6, 10.0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 100);
    Dataset data;
    data.x = Matrix(40, 1);
    data.y = Vector(40);
    for (std::size_t i = 0; i < 40; ++i) {
      data.x(i, 0) = 5.0 * rng.next_uniform();
      data.y[i] = rng.next_normal();
    }
    CvResult res =
        cv_select(data, KernelSpec::rbf(0.5, 1), LossSpec::ls_regression(), grid, 5, seed);
    if (res.lambda == 10.0) ++big_wins;
  }
  CHECK(big_wins >= 15);
}

TEST_CASE("strong smooth signal favors light regularization") {
  std::size_t small_wins = 0;
  const Vector grid{1e-4, 10.0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 200);
    Dataset data = noisy_data(60, rng, 0.05);
    CvResult res =
        cv_select(data, KernelSpec::rbf(0.5, 1), LossSpec::ls_regression(), grid, 5, seed);
    if (res.lambda == 1e-4) ++small_wins;
  }
  CHECK(small_wins >= 15);
}

TEST_CASE("duplicate grid entries are deduplicated") {
  Rng rng(52);
  Dataset data = noisy_data(25, rng);
  CvResult res = cv_select(data, KernelSpec::rbf(0.5, 1), LossSpec::ls_regression(),
                           Vector{1e-3, 1e-2, 1e-3, 1e-2}, 5, 3);
  REQUIRE(res.grid.size() == 2);
  CHECK(res.grid[0] == 1e-3);
  CHECK(res.grid[1] == 1e-2);
  CHECK((res.lambda == 1e-3 || res.lambda == 1e-2));
}

TEST_CASE("selection is deterministic in the seed") {
  Rng rng(53);
  Dataset data = noisy_data(35, rng);
  const Vector grid{1e-4, 1e-3, 1e-2, 1e-1};
  CvResult a = cv_select(data, KernelSpec::rbf(0.5, 1), LossSpec::ls_regression(), grid, 5, 11);
  CvResult b = cv_select(data, KernelSpec::rbf(0.5, 1), LossSpec::ls_regression(), grid, 5, 11);
  CHECK(a.lambda == b.lambda);
  REQUIRE(a.losses.size() == b.losses.size());
  for (std::size_t k = 0; k < a.losses.size(); ++k) CHECK(a.losses[k] == b.losses[k]);
}

TEST_CASE("selected value minimizes the reported held-out losses") {
  Rng rng(54);
  Dataset data = noisy_data(45, rng, 0.3);
  const Vector grid{1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  CvResult res = cv_select(data, KernelSpec::rbf(0.5, 1), LossSpec::ls_regression(), grid, 5, 9);
  CHECK(std::find(res.grid.begin(), res.grid.end(), res.lambda) != res.grid.end());
  double best = res.losses[0];
  for (double l : res.losses) best = std::min(best, l);
  const std::size_t at = static_cast<std::size_t>(
      std::find(res.grid.begin(), res.grid.end(), res.lambda) - res.grid.begin());
  CHECK(res.losses[at] == best);
  // Ties break toward the smallest grid value.
  for (std::size_t k = 0; k < at; ++k) CHECK(res.losses[k] > best);
}

TEST_CASE("precomputed Gram path reproduces the plain path") {
  Rng rng(55);
  Dataset data = noisy_data(30, rng, 0.4);
  const KernelSpec kernel = KernelSpec::rbf(0.5, 1);
  const Vector grid{1e-4, 1e-3, 1e-2};
  const Matrix g = gram(kernel, data.x);
  CvResult plain = cv_select(data, kernel, LossSpec::ls_regression(), grid, 5, 17);
  CvResult cached = cv_select(data, kernel, LossSpec::ls_regression(), grid, 5, 17, &g);
  CHECK(plain.lambda == cached.lambda);
  for (std::size_t k = 0; k < plain.losses.size(); ++k)
    CHECK(plain.losses[k] == doctest::Approx(cached.losses[k]).epsilon(1e-10));
}

TEST_CASE("cross-validation inputs are validated") {
  Rng rng(56);
  Dataset data = noisy_data(10, rng);
  const KernelSpec kernel = KernelSpec::rbf(0.5, 1);
  const LossSpec loss = LossSpec::ls_regression();
  CHECK_THROWS_AS(cv_select(data, kernel, loss, Vector{}, 5, 1), ContractViolation);
  CHECK_THROWS_AS(cv_select(data, kernel, loss, Vector{1e-3}, 1, 1), ContractViolation);
  CHECK_THROWS_AS(cv_select(data, kernel, loss, Vector{1e-3}, 11, 1), ContractViolation);
  CHECK_THROWS_AS(cv_select(data, kernel, loss, Vector{-1.0}, 5, 1), ContractViolation);
  Matrix wrong(3, 3);
  CHECK_THROWS_AS(cv_select(data, kernel, loss, Vector{1e-3}, 5, 1, &wrong), ContractViolation);
}

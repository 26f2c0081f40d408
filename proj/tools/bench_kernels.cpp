// Times the serial reference kernels against the OpenMP versions and checks
// they agree exactly. Sizes are modest so the run stays short on one core.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "kcs/kernel.hpp"
#include "kcs/matrix.hpp"
#include "kcs/rng.hpp"

namespace {

template <class F>
double time_best_of(int reps, F&& body) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    body();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

kcs::Matrix random_matrix(std::size_t n, std::size_t d, kcs::Rng& rng) {
  kcs::Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = 5.0 * rng.next_uniform();
  return x;
}

double max_abs_diff(const kcs::Matrix& a, const kcs::Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

void report(const char* name, double serial, double parallel, double diff) {
  std::printf("%-18s serial %8.4fs  parallel %8.4fs  speedup %5.2fx  max|diff| %g\n", name,
              serial, parallel, serial / parallel, diff);
}

}  // namespace

int main() {
  kcs::Rng rng(2024);
  const std::size_t n = 1200;
  kcs::Matrix x = random_matrix(n, 3, rng);
  kcs::KernelSpec kernel = kcs::KernelSpec::rbf(0.5, 3);

  kcs::Matrix g_serial(1, 1), g_parallel(1, 1);
  double ts = time_best_of(3, [&] { g_serial = kcs::ref::gram(kernel, x); });
  double tp = time_best_of(3, [&] { g_parallel = kcs::gram(kernel, x); });
  report("gram", ts, tp, max_abs_diff(g_serial, g_parallel));

  kcs::Matrix a = random_matrix(600, 600, rng);
  kcs::Matrix b = random_matrix(600, 600, rng);
  kcs::Matrix m_serial(1, 1), m_parallel(1, 1);
  ts = time_best_of(3, [&] { m_serial = kcs::ref::matmul(a, b); });
  tp = time_best_of(3, [&] { m_parallel = kcs::matmul(a, b); });
  report("matmul", ts, tp, max_abs_diff(m_serial, m_parallel));

  kcs::Vector v(600);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.next_normal();
  kcs::Vector r_serial, r_parallel;
  ts = time_best_of(20, [&] { r_serial = kcs::ref::matvec(a, v); });
  tp = time_best_of(20, [&] { r_parallel = kcs::matvec(a, v); });
  double dv = 0.0;
  for (std::size_t i = 0; i < r_serial.size(); ++i)
    dv = std::max(dv, std::abs(r_serial[i] - r_parallel[i]));
  report("matvec", ts, tp, dv);

  return 0;
}

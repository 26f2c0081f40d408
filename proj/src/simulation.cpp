#include "kcs/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "kcs/decomp.hpp"
#include "kcs/error.hpp"
#include "kcs/rng.hpp"
#include "kcs/special.hpp"

namespace kcs {

namespace {

constexpr std::uint64_t kOracleStreamA = 0x6F7261636C652D31;  // distinct fixed tags
constexpr std::uint64_t kOracleStreamB = 0x6F7261636C652D32;
constexpr std::uint64_t kRepStreamBase = 0x7265702D73747265;

double f0(double x) {
  return std::log(x + 2.0) + 0.7 * std::sin(3.0 * x) + 0.7 * std::cos(2.0 * x);
}

// Landmark grid spanning the covariate domain of the scenario.
Matrix landmark_grid(Scenario s) {
  if (s == Scenario::Univariate) {
    const std::size_t q = 41;
    Matrix z(q, 1);
    for (std::size_t i = 0; i < q; ++i)
      z(i, 0) = 5.0 * static_cast<double>(i) / static_cast<double>(q - 1);
    return z;
  }
  const std::size_t qx = 21, qy = 11;
  Matrix z(qx * qy, 2);
  for (std::size_t i = 0; i < qx; ++i) {
    for (std::size_t j = 0; j < qy; ++j) {
      z(i * qy + j, 0) = 5.0 * static_cast<double>(i) / static_cast<double>(qx - 1);
      z(i * qy + j, 1) = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(qy - 1);
    }
  }
  return z;
}

struct BlockAccum {
  Matrix h{1, 1};
  Vector grad;
  double risk = 0.0;
};

// Minimizes (1/N) sum L(y_i, (Phi c)_i) + lambda c^T K c over landmark
// coefficients c by damped Newton with an eigenvalue-truncated step; the
// landmark Gram K is rank-filtered beforehand, so near-null directions carry
// no function-value information and are safely dropped.
Vector fit_landmark_coeffs(const Matrix& x, const Vector& y, const Matrix& z,
                           const KernelSpec& kernel, const LossSpec& loss,
                           double lambda, const Matrix& kzz) {
  const std::size_t big_n = x.rows();
  const std::size_t q = z.rows();
  const double nd = static_cast<double>(big_n);
  const std::size_t block = 4096;
  const std::size_t nblocks = (big_n + block - 1) / block;

  Vector c(q, 0.0);
  Vector u(big_n, 0.0);  // Phi c
  Vector phid(big_n);    // Phi d for the line search

  auto risk_of = [&](const Vector& vals) {
    // Fixed-order blockwise sum keeps the result thread-count independent.
    double total = 0.0;
    for (std::size_t b = 0; b < nblocks; ++b) {
      const std::size_t lo = b * block, hi = std::min(big_n, lo + block);
      double part = 0.0;
      for (std::size_t i = lo; i < hi; ++i) part += kcs::loss(loss, y[i], vals[i]);
      total += part;
    }
    return total / nd;
  };
  auto objective_of = [&](const Vector& coef, const Vector& vals) {
    const Vector kc = matvec(kzz, coef);
    return risk_of(vals) + lambda * dot(coef, kc);
  };

  double obj = objective_of(c, u);
  for (std::size_t iter = 0; iter < 300; ++iter) {
    std::vector<BlockAccum> acc(nblocks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bs = 0; bs < static_cast<std::ptrdiff_t>(nblocks); ++bs) {
      const std::size_t b = static_cast<std::size_t>(bs);
      const std::size_t lo = b * block, hi = std::min(big_n, lo + block);
      acc[b].h = Matrix(q, q);
      acc[b].grad.assign(q, 0.0);
      Vector phi(q);
      for (std::size_t i = lo; i < hi; ++i) {
        for (std::size_t j = 0; j < q; ++j)
          phi[j] = k_eval(kernel, z.row_span(j), x.row_span(i));
        const double lp = dloss(loss, y[i], u[i]);
        const double w = ddloss(loss, y[i], u[i]);
        for (std::size_t j = 0; j < q; ++j) {
          acc[b].grad[j] += lp * phi[j];
          double* hrow = acc[b].h.row(j);
          for (std::size_t l = j; l < q; ++l) hrow[l] += w * phi[j] * phi[l];
        }
      }
    }
    Matrix h(q, q);
    Vector grad = matvec(kzz, c);
    for (double& gv : grad) gv *= 2.0 * lambda;
    for (std::size_t j = 0; j < q; ++j) {
      for (std::size_t l = j; l < q; ++l) h(j, l) = 2.0 * lambda * kzz(j, l);
    }
    for (std::size_t b = 0; b < nblocks; ++b) {
      for (std::size_t j = 0; j < q; ++j) {
        grad[j] += acc[b].grad[j] / nd;
        for (std::size_t l = j; l < q; ++l) h(j, l) += acc[b].h(j, l) / nd;
      }
    }
    for (std::size_t j = 0; j < q; ++j) {
      for (std::size_t l = 0; l < j; ++l) h(j, l) = h(l, j);
    }

    if (norm2(grad) <= 1e-10 * std::max(1.0, std::abs(obj))) break;

    const SymEigResult eig = sym_eig(h);
    const double cut = 1e-14 * std::max(eig.values.front(), 0.0);
    Vector d(q, 0.0);
    for (std::size_t j = 0; j < q; ++j) {
      if (eig.values[j] <= cut) continue;
      double proj = 0.0;
      for (std::size_t i = 0; i < q; ++i) proj += eig.vectors(i, j) * grad[i];
      const double coefj = -proj / eig.values[j];
      for (std::size_t i = 0; i < q; ++i) d[i] += coefj * eig.vectors(i, j);
    }
    double slope = dot(grad, d);
    if (!(slope < 0.0)) {
      for (std::size_t i = 0; i < q; ++i) d[i] = -grad[i];
      slope = dot(grad, d);
      if (!(slope < 0.0)) break;
    }

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t is = 0; is < static_cast<std::ptrdiff_t>(big_n); ++is) {
      const std::size_t i = static_cast<std::size_t>(is);
      double v = 0.0;
      for (std::size_t j = 0; j < q; ++j)
        v += d[j] * k_eval(kernel, z.row_span(j), x.row_span(i));
      phid[i] = v;
    }

    double step = 1.0;
    bool accepted = false;
    Vector c_try(q), u_try(big_n);
    while (step > 1e-12) {
      for (std::size_t j = 0; j < q; ++j) c_try[j] = c[j] + step * d[j];
      for (std::size_t i = 0; i < big_n; ++i) u_try[i] = u[i] + step * phid[i];
      const double obj_try = objective_of(c_try, u_try);
      if (obj_try <= obj + 1e-4 * step * slope) {
        c.swap(c_try);
        u.swap(u_try);
        obj = obj_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return c;
}

}  // namespace

double true_regression(Scenario s, std::span<const double> x) {
  if (s == Scenario::Univariate) {
    if (x.size() != 1) throw ContractViolation("true_regression: expected 1-d point");
    return f0(x[0]);
  }
  if (x.size() != 2) throw ContractViolation("true_regression: expected 2-d point");
  return f0(x[0]) + std::sin(1.5 * x[1]);
}

Dataset gen_univariate(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ContractViolation("gen_univariate: n must be positive");
  Rng rng(seed);
  Dataset d;
  d.x = Matrix(n, 1);
  d.y.resize(n);
  d.task = Task::Regression;
  for (std::size_t i = 0; i < n; ++i) {
    d.x(i, 0) = 5.0 * rng.next_uniform();
    d.y[i] = f0(d.x(i, 0)) + rng.next_normal();
  }
  return d;
}

Dataset gen_bivariate(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ContractViolation("gen_bivariate: n must be positive");
  Rng rng(seed);
  Dataset d;
  d.x = Matrix(n, 2);
  d.y.resize(n);
  d.task = Task::Regression;
  for (std::size_t i = 0; i < n; ++i) {
    d.x(i, 0) = 5.0 * rng.next_uniform();
    d.x(i, 1) = -1.0 + 2.0 * rng.next_uniform();
    d.y[i] = f0(d.x(i, 0)) + std::sin(1.5 * d.x(i, 1)) + rng.next_normal();
  }
  return d;
}

Dataset gen_scenario(Scenario s, std::size_t n, std::uint64_t seed) {
  return s == Scenario::Univariate ? gen_univariate(n, seed) : gen_bivariate(n, seed);
}

Vector default_lambda_grid() {
  return {1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2};
}

double default_gamma(Scenario s) {
  return s == Scenario::Univariate ? 0.5 : 1.0 / 3.0;
}

FittedModel reference_model(Scenario s, double lambda0, double gamma, double loss_sigma,
                            std::size_t oracle_n, std::uint64_t seed) {
  if (oracle_n < 100) throw ContractViolation("reference_model: oracle sample too small");
  const std::size_t dim = s == Scenario::Univariate ? 1 : 2;
  const KernelSpec kernel = KernelSpec::rbf(gamma, dim);
  const LossSpec loss = LossSpec::logistic_regression(loss_sigma);
  const Dataset data = gen_scenario(s, oracle_n, seed);

  Matrix z = landmark_grid(s);
  // Drop numerically dependent landmarks so the reduced Gram is invertible.
  const Matrix kz_full = gram(kernel, z);
  double max_diag = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) max_diag = std::max(max_diag, kz_full(i, i));
  const PivotedCholesky pc = pivoted_cholesky(kz_full, 1e-12 * max_diag);
  std::vector<std::size_t> keep(pc.pivots.begin(), pc.pivots.begin() + pc.rank);
  std::sort(keep.begin(), keep.end());
  z = take_rows(z, keep);
  const Matrix kzz = gram(kernel, z);

  const Vector c = fit_landmark_coeffs(data.x, data.y, z, kernel, loss, lambda0, kzz);

  FittedModel model;
  model.support = z;
  model.coefficients = c;
  model.lambda = lambda0;
  model.kernel = kernel;
  model.loss = loss;
  model.fitted = matvec(kzz, c);
  model.gram = kzz;
  model.diagnostics.converged = true;
  return model;
}

OracleTarget reference_target(Scenario s, double lambda0, const Functional& fun,
                              std::size_t oracle_n, std::uint64_t seed, double margin) {
  Rng master(seed);
  const std::uint64_t seed_a = master.split(kOracleStreamA).next_u64();
  const std::uint64_t seed_b = master.split(kOracleStreamB).next_u64();
  const double gamma = default_gamma(s);
  const FittedModel ma = reference_model(s, lambda0, gamma, 0.5, oracle_n, seed_a);
  const FittedModel mb = reference_model(s, lambda0, gamma, 0.5, oracle_n, seed_b);
  const Vector va = psi_value(fun, ma);
  const Vector vb = psi_value(fun, mb);
  OracleTarget t;
  t.value.resize(va.size());
  for (std::size_t j = 0; j < va.size(); ++j) {
    t.value[j] = 0.5 * (va[j] + vb[j]);
    t.discrepancy = std::max(t.discrepancy, std::abs(va[j] - vb[j]));
  }
  t.stable = t.discrepancy <= margin;
  return t;
}

CoverageReport coverage_experiment(const SimConfig& cfg) {
  if (cfg.replications == 0)
    throw ContractViolation("coverage_experiment: need at least one replication");
  if (cfg.functionals.empty())
    throw ContractViolation("coverage_experiment: no functionals configured");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw ContractViolation("coverage_experiment: alpha must lie in (0, 1)");
  const std::size_t dim = cfg.scenario == Scenario::Univariate ? 1 : 2;
  for (const Functional& f : cfg.functionals) {
    if (f.input_dim() != dim)
      throw ContractViolation("coverage_experiment: functional dimension mismatch");
  }

  const KernelSpec kernel = KernelSpec::rbf(cfg.gamma, dim);
  const LossSpec loss = LossSpec::logistic_regression(cfg.loss_sigma);
  const std::size_t nf = cfg.functionals.size();
  const std::size_t oracle_n =
      cfg.oracle_n > 0 ? cfg.oracle_n : std::max<std::size_t>(100 * cfg.n, 50000);

  CoverageReport report;
  report.oracle_n = oracle_n;
  report.functionals.resize(nf);

  // One pair of oracle fits serves every functional.
  {
    Rng master(cfg.seed);
    const std::uint64_t seed_a = master.split(kOracleStreamA).next_u64();
    const std::uint64_t seed_b = master.split(kOracleStreamB).next_u64();
    const FittedModel ma =
        reference_model(cfg.scenario, cfg.lambda0, cfg.gamma, cfg.loss_sigma, oracle_n, seed_a);
    const FittedModel mb =
        reference_model(cfg.scenario, cfg.lambda0, cfg.gamma, cfg.loss_sigma, oracle_n, seed_b);
    for (std::size_t f = 0; f < nf; ++f) {
      const Vector va = psi_value(cfg.functionals[f], ma);
      const Vector vb = psi_value(cfg.functionals[f], mb);
      OracleTarget t;
      t.value.resize(va.size());
      for (std::size_t j = 0; j < va.size(); ++j) {
        t.value[j] = 0.5 * (va[j] + vb[j]);
        t.discrepancy = std::max(t.discrepancy, std::abs(va[j] - vb[j]));
      }
      t.stable = t.discrepancy <= cfg.oracle_margin;
      report.functionals[f].m = cfg.functionals[f].output_dim();
      report.functionals[f].target = std::move(t);
    }
  }

  Vector grid = cfg.grid;
  if (cfg.constrain) grid = constrain_grid(grid, cfg.lambda0, cfg.constraint_c, cfg.n);

  report.replications.resize(cfg.replications);
  const int workers = static_cast<int>(std::max<std::size_t>(1, cfg.workers));

#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::ptrdiff_t rs = 0; rs < static_cast<std::ptrdiff_t>(cfg.replications); ++rs) {
    const std::size_t r = static_cast<std::size_t>(rs);
    ReplicationRecord rec;
    rec.index = r;
    rec.ok.assign(nf, 0);
    rec.covered.assign(nf, 0);
    rec.length.assign(nf, 0.0);
    rec.sigma_diag.assign(nf, Vector{});
    try {
      Rng rep = Rng(cfg.seed).split(kRepStreamBase + r);
      const std::uint64_t data_seed = rep.next_u64();
      const std::uint64_t cv_seed = rep.next_u64();
      const Dataset data = gen_scenario(cfg.scenario, cfg.n, data_seed);
      const Matrix full_gram = gram(kernel, data.x);
      const CvResult cv = cv_select(data, kernel, loss, grid, cfg.cv_folds, cv_seed, &full_gram);
      rec.lambda = cv.lambda;
      FitOptions opts;
      opts.gram = &full_gram;
      const FittedModel model = fit(data, kernel, loss, cv.lambda, opts);
      const BasisDecomposition basis = basis_decomposition(data, kernel);
      const CovarianceSolver solver(data, model, basis);
      for (std::size_t f = 0; f < nf; ++f) {
        try {
          const CovarianceEstimate est = solver.estimate(cfg.functionals[f]);
          const Vector center = psi_value(cfg.functionals[f], model);
          const ConfidenceEllipsoid ell =
              build_ellipsoid(center, est, cfg.n, cfg.alpha);
          rec.ok[f] = 1;
          rec.covered[f] = contains(ell, report.functionals[f].target.value) ? 1 : 0;
          const std::vector<PrincipalAxis> axes = principal_axes(ell);
          rec.length[f] = 2.0 * axes.front().length;
          rec.sigma_diag[f].resize(est.sigma.rows());
          for (std::size_t j = 0; j < est.sigma.rows(); ++j)
            rec.sigma_diag[f][j] = est.sigma(j, j);
        } catch (const std::exception& e) {
          rec.ok[f] = 0;
          if (rec.error.empty()) rec.error = e.what();
        }
      }
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    report.replications[r] = std::move(rec);
  }

  for (const ReplicationRecord& rec : report.replications) {
    if (rec.failed) ++report.failures;
  }
  for (std::size_t f = 0; f < nf; ++f) {
    FunctionalSummary& s = report.functionals[f];
    double sum_len = 0.0, sum_len2 = 0.0;
    for (const ReplicationRecord& rec : report.replications) {
      if (rec.failed || !rec.ok[f]) continue;
      ++s.completed;
      if (rec.covered[f]) ++s.covered;
      sum_len += rec.length[f];
      sum_len2 += rec.length[f] * rec.length[f];
    }
    if (s.completed > 0) {
      s.coverage = static_cast<double>(s.covered) / static_cast<double>(s.completed);
      s.binomial_margin =
          1.96 * std::sqrt(s.coverage * (1.0 - s.coverage) / static_cast<double>(s.completed));
      s.mean_length = sum_len / static_cast<double>(s.completed);
      if (s.completed > 1) {
        const double var =
            (sum_len2 - sum_len * sum_len / static_cast<double>(s.completed)) /
            static_cast<double>(s.completed - 1);
        s.sd_length = std::sqrt(std::max(0.0, var));
      }
    }
  }
  return report;
}

std::vector<BandRow> band_data(const Dataset& data, const FittedModel& model,
                               const BasisDecomposition& basis, const Matrix& grid,
                               double alpha) {
  const CovarianceSolver solver(data, model, basis);
  const Functional fun = Functional::pointwise(grid);
  const CovarianceEstimate est = solver.estimate(fun);
  const Vector centers = evaluate_many(model, grid);
  const double chi2 = chi_squared_quantile(1, alpha);
  double max_var = 0.0;
  for (std::size_t j = 0; j < grid.rows(); ++j)
    max_var = std::max(max_var, est.sigma(j, j));

  std::vector<BandRow> rows(grid.rows());
  for (std::size_t j = 0; j < grid.rows(); ++j) {
    BandRow& row = rows[j];
    row.x.assign(grid.row(j), grid.row(j) + grid.cols());
    row.center = centers[j];
    row.sigma = est.sigma(j, j);
    if (!(row.sigma > 1e-12 * max_var)) {
      row.degenerate = true;
      row.lo = row.hi = row.center;
      continue;
    }
    const double half = std::sqrt(chi2 * row.sigma / static_cast<double>(est.n));
    row.lo = row.center - half;
    row.hi = row.center + half;
  }
  return rows;
}

}  // namespace kcs

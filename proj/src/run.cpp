#include "kcs/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kcs/confidence.hpp"
#include "kcs/csv.hpp"
#include "kcs/error.hpp"
#include "kcs/simulation.hpp"

namespace kcs {
namespace {

std::string kind_name(FunctionalKind k) {
  switch (k) {
    case FunctionalKind::Pointwise: return "pointwise";
    case FunctionalKind::InnerProducts: return "inner-products";
    case FunctionalKind::GradientAt: return "gradient";
    case FunctionalKind::Integral: return "integral";
    case FunctionalKind::SquaredHNorm: return "squared-h-norm";
    case FunctionalKind::SquaredL2Norm: return "squared-l2-norm";
  }
  return "unknown";
}

std::string join_reals(std::span<const double> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::string matrix_text(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out += ';';
    out += join_reals(m.row_span(i));
  }
  return out;
}

// key = value report body; values are already formatted strings.
struct Report {
  std::string text;
  void add(const std::string& key, const std::string& value) {
    text += key;
    text += " = ";
    text += value;
    text += '\n';
  }
  void add(const std::string& key, double value) { add(key, format_double(value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
  void add_flag(const std::string& key, bool value) { add(key, value ? std::string("true") : std::string("false")); }
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing", path.string(), 0);
  out << text;
  if (!out) throw ParseError("write failed", path.string(), 0);
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) text += ',';
    text += header[j];
  }
  text += '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) text += ',';
      text += row[j];
    }
    text += '\n';
  }
  write_text(path, text);
}

std::filesystem::path output_dir(const ConfigFile& cfg) {
  std::filesystem::path dir = cfg.get_or("output", "dir", "out");
  std::filesystem::create_directories(dir);
  return dir;
}

LossSpec loss_from_config(const ConfigFile& cfg) {
  std::string family = cfg.get_or("loss", "family", "ls-regression");
  if (family == "ls-regression") return LossSpec::ls_regression();
  if (family == "logistic-regression") {
    double sigma = cfg.has("loss", "sigma") ? config_real(cfg, "loss", "sigma") : 0.5;
    return LossSpec::logistic_regression(sigma);
  }
  if (family == "ls-classification") return LossSpec::ls_classification();
  if (family == "logistic-classification") return LossSpec::logistic_classification();
  if (family == "logistic-classification-diff") return LossSpec::logistic_classification_diff();
  throw ContractViolation("loss.family: unknown value '" + family + "'");
}

std::string loss_name(const LossSpec& loss) {
  switch (loss.family) {
    case LossFamily::LsRegression: return "ls-regression";
    case LossFamily::LogisticRegression: return "logistic-regression";
    case LossFamily::LsClassification: return "ls-classification";
    case LossFamily::LogisticClassification: return "logistic-classification";
    case LossFamily::LogisticClassificationDiff: return "logistic-classification-diff";
  }
  return "unknown";
}

// data may be null when no sample is available (simulate); gamma = median
// then has nothing to measure and is rejected.
KernelSpec kernel_from_config(const ConfigFile& cfg, std::size_t dim, const Dataset* data) {
  std::string family = cfg.get_or("kernel", "family", "rbf");
  auto gamma_value = [&](double fallback) {
    std::string raw = cfg.get_or("kernel", "gamma", "");
    if (raw.empty()) return fallback;
    if (raw == "median") {
      if (!data) throw ContractViolation("kernel.gamma: median heuristic needs a data file");
      return median_heuristic_gamma(*data);
    }
    return config_real(cfg, "kernel", "gamma");
  };
  if (family == "rbf") return KernelSpec::rbf(gamma_value(1.0), dim);
  if (family == "exponential") return KernelSpec::exponential(gamma_value(1.0), dim);
  if (family == "linear") return KernelSpec::linear(dim);
  if (family == "polynomial") {
    int degree = cfg.has("kernel", "degree")
                     ? static_cast<int>(config_count(cfg, "kernel", "degree"))
                     : 2;
    double offset = cfg.has("kernel", "offset") ? config_real(cfg, "kernel", "offset") : 1.0;
    double scale = cfg.has("kernel", "scale") ? config_real(cfg, "kernel", "scale") : 1.0;
    return KernelSpec::polynomial(degree, offset, scale, dim);
  }
  throw ContractViolation("kernel.family: unknown value '" + family + "'");
}

void echo_kernel(Report& r, const KernelSpec& k) {
  switch (k.family) {
    case KernelFamily::GaussianRbf:
      r.add("kernel.family", std::string("rbf"));
      r.add("kernel.gamma", k.gamma);
      break;
    case KernelFamily::Exponential:
      r.add("kernel.family", std::string("exponential"));
      r.add("kernel.gamma", k.gamma);
      break;
    case KernelFamily::Linear:
      r.add("kernel.family", std::string("linear"));
      break;
    case KernelFamily::Polynomial:
      r.add("kernel.family", std::string("polynomial"));
      r.add("kernel.degree", static_cast<std::size_t>(k.degree));
      r.add("kernel.offset", k.offset);
      r.add("kernel.scale", k.scale);
      break;
  }
}

// Everything the fit / ci / band tasks share: loaded data, kernel, loss,
// Gram matrix, selected lambda, and the fitted model.
struct FitBundle {
  Dataset data;
  KernelSpec kernel;
  LossSpec loss;
  Matrix gram{1, 1};
  double lambda = 0.0;
  bool used_cv = false;
  CvResult cv;
  FittedModel model;
};

FitBundle prepare_fit(const ConfigFile& cfg) {
  FitBundle b;
  b.loss = loss_from_config(cfg);
  b.data = load_csv(cfg.get("data", "path"));
  b.data.task = b.loss.classification() ? Task::Classification : Task::Regression;
  validate(b.data);
  b.kernel = kernel_from_config(cfg, b.data.dim(), &b.data);
  b.gram = gram(b.kernel, b.data.x);

  std::string select = cfg.get_or("lambda", "select", cfg.has("lambda", "value") ? "fixed" : "cv");
  if (select == "fixed") {
    b.lambda = config_real(cfg, "lambda", "value");
  } else if (select == "cv") {
    Vector grid = cfg.has("lambda", "grid") ? config_reals(cfg, "lambda", "grid")
                                            : default_lambda_grid();
    std::size_t folds = cfg.has("lambda", "folds") ? config_count(cfg, "lambda", "folds") : 5;
    std::uint64_t seed = cfg.has("run", "seed")
                             ? static_cast<std::uint64_t>(config_count(cfg, "run", "seed"))
                             : 1;
    if (cfg.has("lambda", "constrain") && config_flag(cfg, "lambda", "constrain")) {
      double lambda0 = cfg.has("lambda", "lambda0") ? config_real(cfg, "lambda", "lambda0") : 1e-5;
      double c = cfg.has("lambda", "c") ? config_real(cfg, "lambda", "c") : 1.0;
      grid = constrain_grid(grid, lambda0, c, b.data.size());
    }
    b.cv = cv_select(b.data, b.kernel, b.loss, grid, folds, seed, &b.gram);
    b.lambda = b.cv.lambda;
    b.used_cv = true;
  } else {
    throw ContractViolation("lambda.select: unknown value '" + select + "'");
  }

  FitOptions opts;
  opts.gram = &b.gram;
  b.model = fit(b.data, b.kernel, b.loss, b.lambda, opts);
  return b;
}

void echo_fit(Report& r, const ConfigFile& cfg, const FitBundle& b) {
  r.add("data.path", cfg.get("data", "path"));
  r.add("n", b.data.size());
  r.add("d", b.data.dim());
  r.add("task.kind", b.data.task == Task::Classification ? std::string("classification")
                                                         : std::string("regression"));
  echo_kernel(r, b.kernel);
  r.add("loss.family", loss_name(b.loss));
  if (b.loss.family == LossFamily::LogisticRegression) r.add("loss.sigma", b.loss.sigma);
  r.add("lambda", b.lambda);
  r.add("lambda.select", b.used_cv ? std::string("cv") : std::string("fixed"));
  if (b.used_cv) {
    r.add("lambda.grid", join_reals(b.cv.grid));
    r.add("lambda.cv_losses", join_reals(b.cv.losses));
  }
  r.add("fit.iterations", b.model.diagnostics.iterations);
  r.add_flag("fit.converged", b.model.diagnostics.converged);
  r.add("fit.gradient_norm", b.model.diagnostics.gradient_norm);
  r.add("fit.objective", b.model.diagnostics.objective);
  r.add("fit.h_norm_sq", h_norm_sq(b.model));
}

double run_alpha(const ConfigFile& cfg) {
  double alpha = cfg.has("run", "alpha") ? config_real(cfg, "run", "alpha") : 0.05;
  if (!(alpha > 0.0 && alpha < 1.0)) throw ContractViolation("run.alpha: must lie in (0, 1)");
  return alpha;
}

std::vector<std::string> coord_header(std::size_t d) {
  std::vector<std::string> h;
  for (std::size_t j = 0; j < d; ++j) h.push_back("x" + std::to_string(j + 1));
  return h;
}

void run_fit_task(const ConfigFile& cfg, const std::filesystem::path& dir) {
  FitBundle b = prepare_fit(cfg);

  std::vector<std::string> header = coord_header(b.data.dim());
  header.push_back("coefficient");
  std::vector<std::vector<std::string>> rows(b.data.size());
  for (std::size_t i = 0; i < b.data.size(); ++i) {
    for (double v : b.model.support.row_span(i)) rows[i].push_back(format_double(v));
    rows[i].push_back(format_double(b.model.coefficients[i]));
  }
  write_table(dir / "coefficients.csv", header, rows);

  Report r;
  r.add("task", std::string("fit"));
  echo_fit(r, cfg, b);
  write_text(dir / "report.txt", r.text);
}

void run_ci_task(const ConfigFile& cfg, const std::filesystem::path& dir) {
  FitBundle b = prepare_fit(cfg);
  Functional fun = make_functional(cfg, b.data.dim());
  double alpha = run_alpha(cfg);

  BasisDecomposition basis = basis_decomposition(b.data, b.kernel);
  Matrix psi = psi_matrix(fun, b.model, b.data);
  RankTest rt = rank_test(psi);
  CovarianceEstimate cov = sigma_hat(b.data, b.model, basis, fun);
  Vector center = psi_value(fun, b.model);
  ConfidenceEllipsoid ell = build_ellipsoid(center, std::move(cov), b.data.size(), alpha);
  std::vector<PrincipalAxis> axes = principal_axes(ell);

  // Ellipsoid serialization: enough state to rebuild the geometry exactly.
  Report e;
  e.add("m", center.size());
  e.add("n", ell.n);
  e.add("alpha", ell.alpha);
  e.add("center", join_reals(ell.center));
  e.add("sigma", matrix_text(ell.cov.sigma));
  write_text(dir / "ellipsoid.txt", e.text);

  std::vector<std::string> header{"length"};
  for (std::size_t j = 0; j < center.size(); ++j) header.push_back("d" + std::to_string(j + 1));
  std::vector<std::vector<std::string>> rows(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) {
    rows[i].push_back(format_double(axes[i].length));
    for (double v : axes[i].direction) rows[i].push_back(format_double(v));
  }
  write_table(dir / "axes.csv", header, rows);

  Report r;
  r.add("task", std::string("ci"));
  echo_fit(r, cfg, b);
  r.add("functional.kind", kind_name(fun.kind));
  r.add("functional.m", center.size());
  r.add("alpha", alpha);
  r.add("chi2", ell.chi2);
  r.add("center", join_reals(ell.center));
  r.add("sigma", matrix_text(ell.cov.sigma));
  r.add_flag("rank.full", rt.full_rank);
  r.add("rank.numerical", rt.numerical_rank);
  if (center.size() == 1) {
    auto [lo, hi] = interval(ell);
    r.add("interval.lo", lo);
    r.add("interval.hi", hi);
    r.add("interval.length", hi - lo);
  }
  Vector lengths(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) lengths[i] = axes[i].length;
  r.add("axis.lengths", join_reals(lengths));
  write_text(dir / "report.txt", r.text);
}

std::string sanitize_cell(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

void run_simulate_task(const ConfigFile& cfg, const std::filesystem::path& dir) {
  SimConfig sc;
  std::string scenario = cfg.get_or("simulate", "scenario", "univariate");
  if (scenario == "univariate") sc.scenario = Scenario::Univariate;
  else if (scenario == "bivariate") sc.scenario = Scenario::Bivariate;
  else throw ContractViolation("simulate.scenario: unknown value '" + scenario + "'");
  if (cfg.has("data", "path"))
    throw ContractViolation("simulate: data.path conflicts with generated scenarios");

  std::string kernel_family = cfg.get_or("kernel", "family", "rbf");
  if (kernel_family != "rbf")
    throw ContractViolation("simulate: the scenarios are defined for the rbf kernel");
  std::string loss_family = cfg.get_or("loss", "family", "logistic-regression");
  if (loss_family != "logistic-regression")
    throw ContractViolation("simulate: the scenarios are defined for logistic-regression loss");

  if (cfg.has("simulate", "n")) sc.n = config_count(cfg, "simulate", "n");
  if (cfg.has("simulate", "replications"))
    sc.replications = config_count(cfg, "simulate", "replications");
  if (cfg.has("simulate", "oracle_n")) sc.oracle_n = config_count(cfg, "simulate", "oracle_n");
  if (cfg.has("simulate", "oracle_margin"))
    sc.oracle_margin = config_real(cfg, "simulate", "oracle_margin");
  sc.alpha = run_alpha(cfg);
  if (cfg.has("run", "seed"))
    sc.seed = static_cast<std::uint64_t>(config_count(cfg, "run", "seed"));
  if (cfg.has("run", "workers")) sc.workers = config_count(cfg, "run", "workers");
  if (cfg.has("lambda", "lambda0")) sc.lambda0 = config_real(cfg, "lambda", "lambda0");
  if (cfg.has("lambda", "grid")) sc.grid = config_reals(cfg, "lambda", "grid");
  if (cfg.has("lambda", "folds")) sc.cv_folds = config_count(cfg, "lambda", "folds");
  if (cfg.has("lambda", "constrain")) sc.constrain = config_flag(cfg, "lambda", "constrain");
  if (cfg.has("lambda", "c")) sc.constraint_c = config_real(cfg, "lambda", "c");
  sc.gamma = cfg.has("kernel", "gamma") ? config_real(cfg, "kernel", "gamma")
                                        : default_gamma(sc.scenario);
  if (cfg.has("loss", "sigma")) sc.loss_sigma = config_real(cfg, "loss", "sigma");

  std::size_t dim = sc.scenario == Scenario::Bivariate ? 2 : 1;
  sc.functionals.push_back(make_functional(cfg, dim));

  CoverageReport report = coverage_experiment(sc);

  // The report must not depend on the worker count, so run.workers is echoed
  // only in effective_config.txt.
  Report r;
  r.add("task", std::string("simulate"));
  r.add("scenario", scenario);
  r.add("n", sc.n);
  r.add("replications", sc.replications);
  r.add("alpha", sc.alpha);
  r.add("lambda0", sc.lambda0);
  r.add("lambda.grid", join_reals(sc.grid));
  r.add("cv_folds", sc.cv_folds);
  r.add_flag("lambda.constrain", sc.constrain);
  if (sc.constrain) r.add("lambda.c", sc.constraint_c);
  r.add("kernel.gamma", sc.gamma);
  r.add("loss.sigma", sc.loss_sigma);
  r.add("seed", static_cast<std::size_t>(sc.seed));
  r.add("oracle_n", report.oracle_n);
  r.add("oracle_margin", sc.oracle_margin);
  r.add("failures", report.failures);
  for (std::size_t f = 0; f < report.functionals.size(); ++f) {
    const FunctionalSummary& s = report.functionals[f];
    std::string p = "functional." + std::to_string(f + 1) + ".";
    r.add(p + "kind", kind_name(sc.functionals[f].kind));
    r.add(p + "m", s.m);
    r.add(p + "target", join_reals(s.target.value));
    r.add(p + "oracle_discrepancy", s.target.discrepancy);
    r.add_flag(p + "oracle_stable", s.target.stable);
    r.add(p + "completed", s.completed);
    r.add(p + "covered", s.covered);
    r.add(p + "coverage", s.coverage);
    r.add(p + "binomial_margin", s.binomial_margin);
    r.add(p + "mean_length", s.mean_length);
    r.add(p + "sd_length", s.sd_length);
  }
  write_text(dir / "report.txt", r.text);

  std::size_t nf = report.functionals.size();
  std::vector<std::string> header{"rep", "failed", "lambda"};
  for (std::size_t f = 0; f < nf; ++f) {
    std::string p = "f" + std::to_string(f + 1) + "_";
    header.push_back(p + "ok");
    header.push_back(p + "covered");
    header.push_back(p + "length");
  }
  header.push_back("error");
  std::vector<std::vector<std::string>> rows;
  rows.reserve(report.replications.size());
  std::vector<std::vector<std::string>> sigma_rows;
  for (const ReplicationRecord& rec : report.replications) {
    std::vector<std::string> row;
    row.push_back(std::to_string(rec.index));
    row.push_back(rec.failed ? "1" : "0");
    row.push_back(format_double(rec.lambda));
    for (std::size_t f = 0; f < nf; ++f) {
      row.push_back(rec.ok[f] ? "1" : "0");
      row.push_back(rec.covered[f] ? "1" : "0");
      row.push_back(format_double(rec.length[f]));
    }
    row.push_back(sanitize_cell(rec.error));
    rows.push_back(std::move(row));
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t j = 0; j < rec.sigma_diag[f].size(); ++j) {
        sigma_rows.push_back({std::to_string(rec.index), std::to_string(f + 1),
                              std::to_string(j + 1), format_double(rec.sigma_diag[f][j])});
      }
    }
  }
  write_table(dir / "replications.csv", header, rows);
  write_table(dir / "sigma_boxplot.csv", {"rep", "functional", "component", "sigma"},
              sigma_rows);
}

void run_band_task(const ConfigFile& cfg, const std::filesystem::path& dir) {
  FitBundle b = prepare_fit(cfg);
  double alpha = run_alpha(cfg);
  std::size_t d = b.data.dim();

  Vector lo(d), hi(d);
  for (std::size_t j = 0; j < d; ++j) {
    lo[j] = b.data.x(0, j);
    hi[j] = b.data.x(0, j);
    for (std::size_t i = 1; i < b.data.size(); ++i) {
      lo[j] = std::min(lo[j], b.data.x(i, j));
      hi[j] = std::max(hi[j], b.data.x(i, j));
    }
  }
  if (cfg.has("band", "lo")) lo = config_reals(cfg, "band", "lo");
  if (cfg.has("band", "hi")) hi = config_reals(cfg, "band", "hi");
  if (lo.size() != d || hi.size() != d)
    throw ContractViolation("band: lo/hi must have one entry per covariate");
  for (std::size_t j = 0; j < d; ++j)
    if (!(lo[j] <= hi[j])) throw ContractViolation("band: lo must not exceed hi");
  std::size_t count = cfg.has("band", "count") ? config_count(cfg, "band", "count")
                                               : (d == 1 ? 201 : 21);
  if (count == 0) throw ContractViolation("band: count must be positive");

  double total_d = std::pow(static_cast<double>(count), static_cast<double>(d));
  if (total_d > 1e6) throw ContractViolation("band: grid exceeds 1e6 points");
  std::size_t total = static_cast<std::size_t>(total_d + 0.5);

  // Inclusive product grid, last axis fastest.
  Matrix grid_points(total, d);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t r = 0; r < total; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      grid_points(r, j) = count == 1 ? 0.5 * (lo[j] + hi[j])
                                     : lo[j] + (hi[j] - lo[j]) * static_cast<double>(idx[j]) /
                                                   static_cast<double>(count - 1);
    }
    for (std::size_t j = d; j-- > 0;) {
      if (++idx[j] < count) break;
      idx[j] = 0;
    }
  }

  BasisDecomposition basis = basis_decomposition(b.data, b.kernel);
  std::vector<BandRow> rows = band_data(b.data, b.model, basis, grid_points, alpha);

  std::vector<std::string> header = coord_header(d);
  header.push_back("center");
  header.push_back("lo");
  header.push_back("hi");
  header.push_back("sigma");
  header.push_back("degenerate");
  std::vector<std::vector<std::string>> cells(rows.size());
  std::size_t degenerate_count = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (double v : rows[i].x) cells[i].push_back(format_double(v));
    cells[i].push_back(format_double(rows[i].center));
    cells[i].push_back(format_double(rows[i].lo));
    cells[i].push_back(format_double(rows[i].hi));
    cells[i].push_back(format_double(rows[i].sigma));
    cells[i].push_back(rows[i].degenerate ? "1" : "0");
    if (rows[i].degenerate) ++degenerate_count;
  }
  write_table(dir / "band.csv", header, cells);

  Report r;
  r.add("task", std::string("band"));
  echo_fit(r, cfg, b);
  r.add("alpha", alpha);
  r.add("band.lo", join_reals(lo));
  r.add("band.hi", join_reals(hi));
  r.add("band.count", count);
  r.add("band.points", rows.size());
  r.add("band.degenerate", degenerate_count);
  write_text(dir / "report.txt", r.text);
}

}  // namespace

int run(const ConfigFile& cfg) {
  try {
    std::string task = cfg.get("task", "type");
    std::filesystem::path dir = output_dir(cfg);
    write_text(dir / "effective_config.txt", serialize_config(cfg));
    if (task == "fit") run_fit_task(cfg, dir);
    else if (task == "ci") run_ci_task(cfg, dir);
    else if (task == "simulate") run_simulate_task(cfg, dir);
    else if (task == "band") run_band_task(cfg, dir);
    else throw ContractViolation("task.type: unknown value '" + task + "'");
    std::cout << "wrote " << dir.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace kcs

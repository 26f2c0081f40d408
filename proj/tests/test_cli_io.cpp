#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <random>
#include <string>

#include "kcs/config.hpp"
#include "kcs/confidence.hpp"
#include "kcs/csv.hpp"
#include "kcs/error.hpp"
#include "kcs/rng.hpp"
#include "kcs/run.hpp"
#include "kcs/solver.hpp"
#include "kcs/special.hpp"

using namespace kcs;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("kcs_test_" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  REQUIRE(out.good());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("format_double round trips through parse_double") {
  Rng rng(61);
  for (int rep = 0; rep < 2000; ++rep) {
    double v = std::exp(40.0 * (rng.next_uniform() - 0.5)) * (rng.next_uniform() - 0.5);
    const std::string s = format_double(v);
    CHECK(parse_double(s, "t", 1) == v);
  }
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1.0) == "1");
  CHECK(parse_double("0.1", "t", 1) == 0.1);
}

TEST_CASE("csv loads a small regression file") {
  TempDir tmp;
  const std::string p = tmp.file("d.csv");
  write_file(p, "x1,y\n0.5,1.25\n2,-0.5\n");
  Dataset d = load_csv(p);
  REQUIRE(d.size() == 2);
  REQUIRE(d.dim() == 1);
  CHECK(d.x(0, 0) == 0.5);
  CHECK(d.y[0] == 1.25);
  CHECK(d.x(1, 0) == 2.0);
  CHECK(d.y[1] == -0.5);
}

TEST_CASE("csv header fixes the covariate dimension") {
  TempDir tmp;
  const std::string p = tmp.file("d2.csv");
  write_file(p, "x1,x2,y\n0,1,2\n3,4,5\n");
  Dataset d = load_csv(p);
  CHECK(d.dim() == 2);
  CHECK(d.x(1, 1) == 4.0);
}

TEST_CASE("csv save and load round trip preserves every bit") {
  TempDir tmp;
  Rng rng(62);
  Dataset d;
  d.x = Matrix(20, 3);
  d.y = Vector(20);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 3; ++j) d.x(i, j) = rng.next_normal() * 1e3;
    d.y[i] = rng.next_normal() / 7.0;
  }
  const std::string p = tmp.file("rt.csv");
  save_csv(p, d);
  Dataset back = load_csv(p);
  REQUIRE(back.size() == 20);
  REQUIRE(back.dim() == 3);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(back.x(i, j) == d.x(i, j));
    CHECK(back.y[i] == d.y[i]);
  }
}

TEST_CASE("csv rejects malformed inputs with located errors") {
  TempDir tmp;
  const std::string p = tmp.file("bad.csv");
  CHECK_THROWS_AS(load_csv(tmp.file("missing.csv")), ParseError);

  write_file(p, "a,b\n1,2\n");
  CHECK_THROWS_AS(load_csv(p), ParseError);

  write_file(p, "x1,y\n1,2\n3\n");
  CHECK_THROWS_AS(load_csv(p), ParseError);

  write_file(p, "x1,y\n1,2\n3,zebra\n");
  try {
    load_csv(p);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }

  write_file(p, "x1,y\n1,nan\n");
  CHECK_THROWS_AS(load_csv(p), ParseError);
  write_file(p, "x1,y\n1,inf\n");
  CHECK_THROWS_AS(load_csv(p), ParseError);
  write_file(p, "x1,y\n");
  CHECK_THROWS_AS(load_csv(p), ParseError);
}

TEST_CASE("median heuristic bandwidth pinned values") {
  Dataset two;
  two.x = Matrix(2, 1);
  two.x(0, 0) = 0.0;
  two.x(1, 0) = 2.0;
  two.y = Vector{0.0, 0.0};
  CHECK(median_heuristic_gamma(two) == doctest::Approx(0.25).epsilon(1e-15));

  Dataset three;
  three.x = Matrix(3, 1);
  three.x(0, 0) = 0.0;
  three.x(1, 0) = 1.0;
  three.x(2, 0) = 2.0;
  three.y = Vector{0.0, 0.0, 0.0};
  // Pairwise squared distances {1, 1, 4}: median 1.
  CHECK(median_heuristic_gamma(three) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("median heuristic concentrates for uniform covariates") {
  Rng rng(63);
  Dataset d;
  d.x = Matrix(3000, 1);
  d.y = Vector(3000, 0.0);
  for (std::size_t i = 0; i < 3000; ++i) d.x(i, 0) = 5.0 * rng.next_uniform();
  const double g = median_heuristic_gamma(d);
  // Median of (U[0,5] - U[0,5])^2 is about 2.14, so gamma is near 0.466.
  CHECK(g > 0.40);
  CHECK(g < 0.55);
}

TEST_CASE("config parse and serialize round trip") {
  const std::string text =
      "[task]\n"
      "type = fit\n"
      "\n"
      "[data]\n"
      "path = d.csv\n"
      "\n"
      "[kernel]\n"
      "family = rbf\n"
      "gamma = 0.5\n"
      "\n"
      "[lambda]\n"
      "value = 0.001\n";
  ConfigFile cfg = parse_config(text, "inline");
  CHECK(cfg.get("task", "type") == "fit");
  CHECK(cfg.get("kernel", "gamma") == "0.5");
  CHECK(cfg.get_or("kernel", "family", "?") == "rbf");
  CHECK_FALSE(cfg.has("run", "seed"));
  const std::string out = serialize_config(cfg);
  ConfigFile again = parse_config(out, "inline2");
  CHECK(serialize_config(again) == out);
  CHECK(again.get("lambda", "value") == "0.001");
}

TEST_CASE("unknown sections and keys are rejected") {
  CHECK_THROWS_AS(parse_config("[nonsense]\nkey = 1\n", "t"), ParseError);
  CHECK_THROWS_AS(parse_config("[kernel]\nflavor = spicy\n", "t"), ParseError);
  CHECK_THROWS_AS(parse_config("loose = 1\n", "t"), ParseError);
  CHECK_THROWS_AS(parse_config("[kernel\ngamma = 1\n", "t"), ParseError);
}

TEST_CASE("typed config readers validate their values") {
  ConfigFile cfg = parse_config("[kernel]\ngamma = 0.5\n[run]\nseed = 42\nworkers = 3\n", "t");
  CHECK(config_real(cfg, "kernel", "gamma") == 0.5);
  CHECK(config_count(cfg, "run", "seed") == 42);
  CHECK(config_count(cfg, "run", "workers") == 3);
  ConfigFile bad = parse_config("[kernel]\ngamma = fast\n", "t");
  CHECK_THROWS_AS(config_real(bad, "kernel", "gamma"), ParseError);
  CHECK_THROWS_AS(config_real(bad, "kernel", "missing"), ParseError);
}

TEST_CASE("matrix grammar parses rows and entries") {
  ConfigFile cfg = parse_config("[functional]\npoints = 1,2; 3,4; 5,6\n", "t");
  Matrix m = config_matrix(cfg, "functional", "points");
  REQUIRE(m.rows() == 3);
  REQUIRE(m.cols() == 2);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(2, 1) == 6.0);
  ConfigFile ragged = parse_config("[functional]\npoints = 1,2; 3\n", "t");
  CHECK_THROWS_AS(config_matrix(ragged, "functional", "points"), ParseError);
}

TEST_CASE("overrides rewrite existing schema keys only") {
  ConfigFile cfg = parse_config("[kernel]\ngamma = 0.5\n", "t");
  apply_override(cfg, "kernel.gamma=0.75");
  CHECK(cfg.get("kernel", "gamma") == "0.75");
  apply_override(cfg, "run.seed=9");
  CHECK(cfg.get("run", "seed") == "9");
  CHECK_THROWS_AS(apply_override(cfg, "kernel.flavor=hot"), ParseError);
  CHECK_THROWS_AS(apply_override(cfg, "no_dot_or_equals"), ParseError);
}

TEST_CASE("functional factory reads every kind") {
  ConfigFile cfg = parse_config("[functional]\nkind = pointwise\npoints = 1; 2; 3\n", "t");
  CHECK(make_functional(cfg, 1).output_dim() == 3);
  cfg = parse_config("[functional]\nkind = gradient\nx0 = 1,2\n", "t");
  CHECK(make_functional(cfg, 2).output_dim() == 2);
  cfg = parse_config("[functional]\nkind = squared-h-norm\n", "t");
  CHECK(make_functional(cfg, 2).output_dim() == 1);
  cfg = parse_config(
      "[functional]\nkind = integral\nlo = 0\nhi = 1\nmeasure = grid\nnodes = 11\n", "t");
  CHECK(make_functional(cfg, 1).output_dim() == 1);
  cfg = parse_config("[functional]\nkind = pointwise\n", "t");
  CHECK_THROWS(make_functional(cfg, 1));  // points missing
}

TEST_CASE("fit task writes coefficients and a report") {
  TempDir tmp;
  write_file(tmp.file("d.csv"), "x1,y\n0,0.1\n1,0.8\n2,0.4\n");
  ConfigFile cfg = parse_config(
      "[task]\ntype = fit\n[data]\npath = " + tmp.file("d.csv") +
          "\n[kernel]\nfamily = rbf\ngamma = 0.5\n[lambda]\nvalue = 0.01\n[output]\ndir = " +
          tmp.file("out"),
      "t");
  REQUIRE(kcs::run(cfg) == 0);
  const std::string coef = read_file(tmp.file("out") + "/coefficients.csv");
  CHECK(coef.rfind("x1,coefficient\n", 0) == 0);
  CHECK(std::count(coef.begin(), coef.end(), '\n') == 4);  // header + 3 rows
  const std::string report = read_file(tmp.file("out") + "/report.txt");
  CHECK(report.find("task = fit") != std::string::npos);
  CHECK(report.find("lambda = 0.01") != std::string::npos);
  CHECK(read_file(tmp.file("out") + "/effective_config.txt").find("[task]") !=
        std::string::npos);

  // The written coefficients reproduce the library fit exactly.
  Dataset d = load_csv(tmp.file("d.csv"));
  FittedModel m = fit(d, KernelSpec::rbf(0.5, 1), LossSpec::ls_regression(), 0.01);
  std::istringstream lines(coef);
  std::string line;
  std::getline(lines, line);
  for (std::size_t i = 0; i < 3; ++i) {
    std::getline(lines, line);
    const std::size_t comma = line.rfind(',');
    CHECK(parse_double(line.substr(comma + 1), "t", 0) == m.coefficients[i]);
  }
}

TEST_CASE("ci task reports an interval that matches the library geometry") {
  TempDir tmp;
  Rng rng(64);
  std::ostringstream csv;
  csv << "x1,y\n";
  for (int i = 0; i < 40; ++i) {
    const double x = 5.0 * rng.next_uniform();
    csv << format_double(x) << "," << format_double(std::sin(x) + 0.1 * rng.next_normal())
        << "\n";
  }
  write_file(tmp.file("d.csv"), csv.str());
  ConfigFile cfg = parse_config(
      "[task]\ntype = ci\n[data]\npath = " + tmp.file("d.csv") +
          "\n[kernel]\nfamily = rbf\ngamma = 0.5\n[lambda]\nvalue = 0.001\n"
          "[functional]\nkind = pointwise\npoints = 2.5\n[run]\nalpha = 0.05\n"
          "[output]\ndir = " +
          tmp.file("out"),
      "t");
  REQUIRE(kcs::run(cfg) == 0);
  const std::string report = read_file(tmp.file("out") + "/report.txt");
  CHECK(report.find("functional.kind = pointwise") != std::string::npos);
  CHECK(report.find("interval.lo = ") != std::string::npos);

  Dataset d = load_csv(tmp.file("d.csv"));
  FittedModel m = fit(d, KernelSpec::rbf(0.5, 1), LossSpec::ls_regression(), 0.001);
  BasisDecomposition basis = basis_decomposition(d, m.kernel);
  const Functional fun = Functional::pointwise(Matrix(1, 1, 2.5));
  CovarianceEstimate est = sigma_hat(d, m, basis, fun);
  ConfidenceEllipsoid ell = build_ellipsoid(psi_value(fun, m), est, d.size(), 0.05);
  auto [lo, hi] = interval(ell);
  auto grab = [&](const std::string& key) {
    const std::size_t at = report.find(key + " = ");
    REQUIRE(at != std::string::npos);
    const std::size_t start = at + key.size() + 3;
    return parse_double(report.substr(start, report.find('\n', start) - start), "t", 0);
  };
  CHECK(grab("interval.lo") == doctest::Approx(lo).epsilon(1e-12));
  CHECK(grab("interval.hi") == doctest::Approx(hi).epsilon(1e-12));
  CHECK(grab("interval.length") == doctest::Approx(hi - lo).epsilon(1e-12));

  const std::string axes = read_file(tmp.file("out") + "/axes.csv");
  CHECK(axes.rfind("length,d1\n", 0) == 0);
}

TEST_CASE("repeated runs with the same config are byte identical") {
  TempDir tmp;
  write_file(tmp.file("d.csv"), "x1,y\n0,0.1\n1,0.8\n2,0.4\n3,0.9\n4,0.2\n");
  const std::string base =
      "[task]\ntype = ci\n[data]\npath = " + tmp.file("d.csv") +
      "\n[kernel]\nfamily = rbf\ngamma = 0.5\n[lambda]\nselect = cv\ngrid = 0.001,0.01,0.1\n"
      "[functional]\nkind = pointwise\npoints = 2\n[run]\nseed = 3\n[output]\ndir = ";
  ConfigFile a = parse_config(base + tmp.file("a"), "t");
  ConfigFile b = parse_config(base + tmp.file("b"), "t");
  REQUIRE(kcs::run(a) == 0);
  REQUIRE(kcs::run(b) == 0);
  for (const std::string name : {"report.txt", "ellipsoid.txt", "axes.csv"}) {
    CHECK(read_file(tmp.file("a") + "/" + name) == read_file(tmp.file("b") + "/" + name));
  }
}

TEST_CASE("band task emits a grid with interval columns") {
  TempDir tmp;
  Rng rng(65);
  std::ostringstream csv;
  csv << "x1,y\n";
  for (int i = 0; i < 30; ++i) {
    const double x = 5.0 * rng.next_uniform();
    csv << format_double(x) << "," << format_double(std::cos(x) + 0.2 * rng.next_normal())
        << "\n";
  }
  write_file(tmp.file("d.csv"), csv.str());
  ConfigFile cfg = parse_config(
      "[task]\ntype = band\n[data]\npath = " + tmp.file("d.csv") +
          "\n[kernel]\nfamily = rbf\ngamma = 0.5\n[lambda]\nvalue = 0.01\n"
          "[band]\nlo = 0\nhi = 5\ncount = 21\n[run]\nalpha = 0.05\n[output]\ndir = " +
          tmp.file("out"),
      "t");
  REQUIRE(kcs::run(cfg) == 0);
  const std::string band = read_file(tmp.file("out") + "/band.csv");
  CHECK(band.rfind("x1,center,lo,hi,sigma,degenerate\n", 0) == 0);
  CHECK(std::count(band.begin(), band.end(), '\n') == 22);
  const std::string report = read_file(tmp.file("out") + "/report.txt");
  CHECK(report.find("band.points = 21") != std::string::npos);
}

TEST_CASE("run rejects an unknown task type") {
  ConfigFile cfg = parse_config("[task]\ntype = dance\n", "t");
  CHECK(kcs::run(cfg) == 1);
}

#include "kcs/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "kcs/error.hpp"

namespace kcs {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& file, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e)
    throw ParseError("not a number: '" + s + "'", file, line);
  if (!std::isfinite(v))
    throw ParseError("non-finite value: '" + s + "'", file, line);
  return v;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file", path, 0);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file", path, 0);
  const std::vector<std::string> header = split_cells(line);
  if (header.size() < 2 || header.back() != "y")
    throw ParseError("header must be x1,...,xd,y", path, 1);
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "x" + std::to_string(j + 1))
      throw ParseError("header must be x1,...,xd,y (got '" + header[j] + "')", path, 1);
  }

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_cells(line);
    if (cells.size() != d + 1)
      throw ParseError("expected " + std::to_string(d + 1) + " cells, got " +
                           std::to_string(cells.size()),
                       path, lineno);
    std::vector<double> row(d + 1);
    for (std::size_t j = 0; j <= d; ++j) row[j] = parse_double(cells[j], path, lineno);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows", path, lineno);

  Dataset data;
  data.x = Matrix(rows.size(), d);
  data.y.resize(rows.size());
  data.task = Task::Regression;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) data.x(i, j) = rows[i][j];
    data.y[i] = rows[i][d];
  }
  return data;
}

void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open file for writing", path, 0);
  const std::size_t d = data.dim();
  for (std::size_t j = 0; j < d; ++j) out << "x" << (j + 1) << ",";
  out << "y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out << format_double(data.x(i, j)) << ",";
    out << format_double(data.y[i]) << "\n";
  }
  if (!out) throw ParseError("write failed", path, 0);
}

double median_heuristic_gamma(const Dataset& data) {
  validate(data);
  if (data.size() < 2)
    throw ContractViolation("median_heuristic_gamma: need at least two points");
  std::vector<std::size_t> idx;
  const std::size_t cap = 4000;
  if (data.size() <= cap) {
    idx.resize(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  } else {
    idx.resize(cap);
    for (std::size_t i = 0; i < cap; ++i) idx[i] = i * data.size() / cap;
  }
  std::vector<double> dists;
  dists.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < data.dim(); ++j) {
        const double diff = data.x(idx[a], j) - data.x(idx[b], j);
        d2 += diff * diff;
      }
      dists.push_back(d2);
    }
  }
  const std::size_t half = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + half, dists.end());
  double med = dists[half];
  if (dists.size() % 2 == 0) {
    // Even count: average the two middle order statistics.
    const double upper = med;
    std::nth_element(dists.begin(), dists.begin() + half - 1, dists.begin() + half);
    med = 0.5 * (dists[half - 1] + upper);
  }
  if (!(med > 0.0))
    throw ContractViolation("median_heuristic_gamma: median pairwise distance is zero");
  return 1.0 / med;
}

}  // namespace kcs

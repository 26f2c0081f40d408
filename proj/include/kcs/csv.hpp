#pragma once

#include <string>

#include "kcs/dataset.hpp"

namespace kcs {

// Shortest decimal representation that parses back to exactly v.
std::string format_double(double v);

// Strict inverse of format_double; the whole string must be consumed.
double parse_double(const std::string& s, const std::string& file, std::size_t line);

// Header "x1,...,xd,y", one observation per row, all cells finite numbers.
// The task defaults to regression; callers working with classification
// losses set it afterwards and re-validate.
Dataset load_csv(const std::string& path);

void save_csv(const std::string& path, const Dataset& data);

// 1 / median of pairwise squared distances. Exact up to 4000 points; larger
// inputs use an evenly strided 4000-point subset (deterministic).
double median_heuristic_gamma(const Dataset& data);

}  // namespace kcs

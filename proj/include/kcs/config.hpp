#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kcs/functional.hpp"

namespace kcs {

// Line-oriented sectioned key=value configuration. Sections and keys keep
// their file order so a serialized round trip is stable; unknown sections or
// keys are rejected at parse time.
struct ConfigFile {
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };
  std::vector<Section> sections;
  std::string origin;  // file name for error messages

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> find(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  void set(const std::string& section, const std::string& key, const std::string& value);
};

ConfigFile parse_config(const std::string& text, const std::string& origin);
ConfigFile load_config(const std::string& path);
std::string serialize_config(const ConfigFile& cfg);

// "section.key=value" override, applied after file parsing; the pair must be
// part of the known schema.
void apply_override(ConfigFile& cfg, const std::string& spec);

// Typed readers; errors carry the section.key path.
double config_real(const ConfigFile& cfg, const std::string& section, const std::string& key);
std::size_t config_count(const ConfigFile& cfg, const std::string& section,
                         const std::string& key);
bool config_flag(const ConfigFile& cfg, const std::string& section, const std::string& key);
Vector config_reals(const ConfigFile& cfg, const std::string& section, const std::string& key);

// Matrix grammar: rows separated by ';', entries by ','.
Matrix config_matrix(const ConfigFile& cfg, const std::string& section, const std::string& key);

// Builds the functional described by the [functional] section:
//   kind = pointwise | inner-products | gradient | integral | squared-h-norm
//          | squared-l2-norm
//   points, coeffs (matrix grammar), x0, lo, hi (comma lists),
//   measure = empirical | grid, nodes = count, dim = count (squared-h-norm).
Functional make_functional(const ConfigFile& cfg, std::size_t data_dim);

}  // namespace kcs

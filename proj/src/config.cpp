#include "kcs/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "kcs/csv.hpp"
#include "kcs/error.hpp"

namespace kcs {

namespace {

struct SchemaEntry {
  const char* section;
  const char* key;
};

// Every accepted section.key pair; anything else is rejected at parse time.
constexpr SchemaEntry kSchema[] = {
    {"task", "type"},
    {"data", "path"},
    {"kernel", "family"},
    {"kernel", "gamma"},
    {"kernel", "degree"},
    {"kernel", "offset"},
    {"kernel", "scale"},
    {"loss", "family"},
    {"loss", "sigma"},
    {"lambda", "value"},
    {"lambda", "select"},
    {"lambda", "grid"},
    {"lambda", "folds"},
    {"lambda", "lambda0"},
    {"lambda", "constrain"},
    {"lambda", "c"},
    {"functional", "kind"},
    {"functional", "points"},
    {"functional", "coeffs"},
    {"functional", "x0"},
    {"functional", "lo"},
    {"functional", "hi"},
    {"functional", "measure"},
    {"functional", "nodes"},
    {"functional", "dim"},
    {"simulate", "scenario"},
    {"simulate", "n"},
    {"simulate", "replications"},
    {"simulate", "oracle_n"},
    {"simulate", "oracle_margin"},
    {"band", "lo"},
    {"band", "hi"},
    {"band", "count"},
    {"output", "dir"},
    {"run", "seed"},
    {"run", "workers"},
    {"run", "alpha"},
};

bool schema_has(const std::string& section, const std::string& key) {
  for (const SchemaEntry& e : kSchema) {
    if (section == e.section && key == e.key) return true;
  }
  return false;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(trim(s.substr(start)));
      break;
    }
    out.push_back(trim(s.substr(start, p - start)));
    start = p + 1;
  }
  return out;
}

}  // namespace

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key).has_value();
}

std::optional<std::string> ConfigFile::find(const std::string& section,
                                            const std::string& key) const {
  for (const Section& s : sections) {
    if (s.name != section) continue;
    for (const auto& [k, v] : s.entries) {
      if (k == key) return v;
    }
  }
  return std::nullopt;
}

std::string ConfigFile::get(const std::string& section, const std::string& key) const {
  const auto v = find(section, key);
  if (!v) throw ParseError("missing required key " + section + "." + key, origin, 0);
  return *v;
}

std::string ConfigFile::get_or(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  const auto v = find(section, key);
  return v ? *v : fallback;
}

void ConfigFile::set(const std::string& section, const std::string& key,
                     const std::string& value) {
  for (Section& s : sections) {
    if (s.name != section) continue;
    for (auto& [k, v] : s.entries) {
      if (k == key) {
        v = value;
        return;
      }
    }
    s.entries.emplace_back(key, value);
    return;
  }
  sections.push_back({section, {{key, value}}});
}

ConfigFile parse_config(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("malformed section header: " + line, origin, lineno);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError("empty section name", origin, lineno);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected key = value: " + line, origin, lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ParseError("key outside any section: " + key, origin, lineno);
    if (key.empty()) throw ParseError("empty key", origin, lineno);
    if (!schema_has(section, key))
      throw ParseError("unknown key " + section + "." + key, origin, lineno);
    if (cfg.has(section, key))
      throw ParseError("duplicate key " + section + "." + key, origin, lineno);
    cfg.set(section, key, value);
  }
  return cfg;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file", path, 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string serialize_config(const ConfigFile& cfg) {
  std::ostringstream out;
  bool first = true;
  for (const ConfigFile::Section& s : cfg.sections) {
    if (!first) out << "\n";
    first = false;
    out << "[" << s.name << "]\n";
    for (const auto& [k, v] : s.entries) out << k << " = " << v << "\n";
  }
  return out.str();
}

void apply_override(ConfigFile& cfg, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  const std::size_t dotpos = spec.find('.');
  if (eq == std::string::npos || dotpos == std::string::npos || dotpos > eq)
    throw ParseError("override must look like section.key=value: " + spec, "<cli>", 0);
  const std::string section = trim(spec.substr(0, dotpos));
  const std::string key = trim(spec.substr(dotpos + 1, eq - dotpos - 1));
  const std::string value = trim(spec.substr(eq + 1));
  if (!schema_has(section, key))
    throw ParseError("unknown key " + section + "." + key, "<cli>", 0);
  cfg.set(section, key, value);
}

double config_real(const ConfigFile& cfg, const std::string& section, const std::string& key) {
  return parse_double(cfg.get(section, key), cfg.origin + ":" + section + "." + key, 0);
}

std::size_t config_count(const ConfigFile& cfg, const std::string& section,
                         const std::string& key) {
  const std::string s = cfg.get(section, key);
  const std::string where = cfg.origin + ":" + section + "." + key;
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError("not a nonnegative integer: '" + s + "'", where, 0);
  return static_cast<std::size_t>(std::stoull(s));
}

bool config_flag(const ConfigFile& cfg, const std::string& section, const std::string& key) {
  const std::string s = cfg.get(section, key);
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw ParseError("not a boolean: '" + s + "'", cfg.origin + ":" + section + "." + key, 0);
}

Vector config_reals(const ConfigFile& cfg, const std::string& section, const std::string& key) {
  const std::string s = cfg.get(section, key);
  const std::string where = cfg.origin + ":" + section + "." + key;
  Vector out;
  for (const std::string& cell : split(s, ',')) out.push_back(parse_double(cell, where, 0));
  return out;
}

Matrix config_matrix(const ConfigFile& cfg, const std::string& section, const std::string& key) {
  const std::string s = cfg.get(section, key);
  const std::string where = cfg.origin + ":" + section + "." + key;
  const std::vector<std::string> rows = split(s, ';');
  if (rows.empty()) throw ParseError("empty matrix", where, 0);
  std::vector<Vector> parsed;
  for (const std::string& row : rows) {
    Vector r;
    for (const std::string& cell : split(row, ',')) r.push_back(parse_double(cell, where, 0));
    if (!parsed.empty() && r.size() != parsed.front().size())
      throw ParseError("ragged matrix rows", where, 0);
    parsed.push_back(std::move(r));
  }
  Matrix m(parsed.size(), parsed.front().size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    for (std::size_t j = 0; j < parsed[i].size(); ++j) m(i, j) = parsed[i][j];
  }
  return m;
}

Functional make_functional(const ConfigFile& cfg, std::size_t data_dim) {
  const std::string kind = cfg.get("functional", "kind");
  if (kind == "pointwise") {
    return Functional::pointwise(config_matrix(cfg, "functional", "points"));
  }
  if (kind == "inner-products") {
    return Functional::inner_products(config_matrix(cfg, "functional", "points"),
                                      config_matrix(cfg, "functional", "coeffs"));
  }
  if (kind == "gradient") {
    return Functional::gradient_at(config_reals(cfg, "functional", "x0"));
  }
  if (kind == "integral") {
    const std::string measure = cfg.get_or("functional", "measure", "empirical");
    IntegralMeasure m;
    if (measure == "empirical") {
      m = IntegralMeasure::Empirical;
    } else if (measure == "grid") {
      m = IntegralMeasure::LebesgueGrid;
    } else {
      throw ParseError("functional.measure must be empirical or grid", cfg.origin, 0);
    }
    std::size_t nodes = 201;
    if (cfg.has("functional", "nodes")) nodes = config_count(cfg, "functional", "nodes");
    return Functional::integral(config_reals(cfg, "functional", "lo"),
                                config_reals(cfg, "functional", "hi"), m, nodes);
  }
  if (kind == "squared-h-norm") {
    std::size_t dim = data_dim;
    if (cfg.has("functional", "dim")) dim = config_count(cfg, "functional", "dim");
    return Functional::squared_h_norm(dim);
  }
  if (kind == "squared-l2-norm") {
    std::size_t nodes = 201;
    if (cfg.has("functional", "nodes")) nodes = config_count(cfg, "functional", "nodes");
    return Functional::squared_l2_norm(config_reals(cfg, "functional", "lo"),
                                       config_reals(cfg, "functional", "hi"), nodes);
  }
  throw ParseError("unknown functional.kind: " + kind, cfg.origin, 0);
}

}  // namespace kcs

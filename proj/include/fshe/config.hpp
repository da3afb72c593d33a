#ifndef FSHE_CONFIG_HPP
#define FSHE_CONFIG_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fshe/errors.hpp"
#include "fshe/network.hpp"
#include "fshe/she.hpp"
#include "fshe/structure.hpp"

namespace fshe {

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"verify", "spectrum", "resistance", "simulate", "holder", "invariant"};
  return kinds;
}

/// A structure given by its level-1 data instead of a preset name.
/// In a [structure] section: weights, a0 (rows separated by |), gluing as cell:point=cell:point tokens, embedding as cell:point tokens.
struct UserStructure {
  std::string name = "user";
  std::vector<double> weights;
  std::vector<std::vector<double>> a0;  // rows
  std::vector<Gluing> gluing;
  std::vector<CellPoint> embedding;
  bool operator==(const UserStructure&) const = default;

  [[nodiscard]] PcfStructure build() const {
    const auto b = static_cast<Eigen::Index>(a0.size());
    Eigen::MatrixXd m(b, b);
    for (Eigen::Index i = 0; i < b; ++i) {
      if (static_cast<Eigen::Index>(a0[static_cast<std::size_t>(i)].size()) != b) throw ConfigError("a0 must be a square matrix");
      for (Eigen::Index j = 0; j < b; ++j) m(i, j) = a0[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    try {
      return PcfStructure(name, weights, m, gluing, embedding);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("invalid [structure]: ") + e.what());
    }
  }
};

struct ExperimentConfig {
  std::string kind = "verify";
  std::string preset = "gasket(2)";
  std::optional<UserStructure> structure;
  int level = 3;
  Boundary bc = Boundary::Dirichlet;
  double alpha = 0.0;
  int modes = 0;  // 0: the kind's default truncation, -1: every mode
  double t_end = 1.0;
  int steps = 10;
  int replicas = 1000;
  std::uint64_t seed = 0;
  std::string out = "fshe-out";
  InitialCondition initial = InitialCondition::Fixed;
  std::vector<double> u0;     // initial u-coefficients (simulate)
  std::vector<int> vertices;  // recorded vertices (simulate); empty records all
  int record_modes = 5;       // coefficients exported or tested
  bool operator==(const ExperimentConfig&) const = default;

  [[nodiscard]] PcfStructure build_structure() const {
    if (structure) return structure->build();
    try {
      return fshe::preset(this->preset);
    } catch (const DomainError&) {
      throw ConfigError("invalid preset name '" + this->preset + "' (expected interval(M) or gasket(n))");
    }
  }

  /// Uniform grid t_i = t_end * i / steps.
  [[nodiscard]] std::vector<double> time_grid() const {
    std::vector<double> t;
    for (int i = 0; i <= steps; ++i) t.push_back(t_end * i / steps);
    return t;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  const auto d = parse_integer(key, v);
  if (d < std::numeric_limits<int>::min() || d > std::numeric_limits<int>::max()) throw ConfigError("key '" + key + "': value out of range");
  return static_cast<int>(d);
}

inline std::uint64_t parse_seed(const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto d = std::stoull(v, &used, 0);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key 'seed': expected a nonnegative 64-bit integer, got '" + v + "'");
  }
}

/// "cell:point", 1-based cell.
inline CellPoint parse_cell_point(const std::string& v) {
  const auto parts = split(v, ':');
  if (parts.size() != 2) throw ConfigError("expected cell:point, got '" + v + "'");
  return {parse_int("cell", parts[0]), parse_int("point", parts[1])};
}

inline std::string format_cell_point(const CellPoint& p) { return std::to_string(p.cell) + ":" + std::to_string(p.point); }

using Section = std::vector<std::pair<std::string, std::string>>;

inline std::map<std::string, Section> parse_sections(const std::string& text) {
  std::map<std::string, Section> sections;
  std::string current;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find_first_of("#;");
    line = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(number) + ": malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      if (sections.count(current)) throw ConfigError("duplicate section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    if (current.empty()) throw ConfigError("line " + std::to_string(number) + ": key outside any section");
    auto& sec = sections[current];
    const auto key = trim(line.substr(0, eq));
    for (const auto& [k, v] : sec)
      if (k == key) throw ConfigError("duplicate key '" + key + "' in [" + current + "]");
    sec.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return sections;
}

inline UserStructure parse_structure(const Section& sec) {
  UserStructure u;
  std::set<std::string> seen;
  for (const auto& [key, value] : sec) {
    seen.insert(key);
    if (key == "name") {
      u.name = value;
    } else if (key == "weights") {
      for (const auto& w : words(value)) u.weights.push_back(parse_double(key, w));
    } else if (key == "a0") {
      for (const auto& row : split(value, '|')) {
        std::vector<double> r;
        for (const auto& w : words(row)) r.push_back(parse_double(key, w));
        u.a0.push_back(std::move(r));
      }
    } else if (key == "gluing") {
      for (const auto& g : words(value)) {
        const auto sides = split(g, '=');
        if (sides.size() != 2) throw ConfigError("gluing entries look like 1:1=2:0, got '" + g + "'");
        u.gluing.push_back({parse_cell_point(sides[0]), parse_cell_point(sides[1])});
      }
    } else if (key == "embedding") {
      for (const auto& p : words(value)) u.embedding.push_back(parse_cell_point(p));
    } else {
      throw ConfigError("unknown key '" + key + "' in [structure]");
    }
  }
  for (const char* required : {"weights", "a0", "embedding"})
    if (!seen.count(required)) throw ConfigError(std::string("[structure] is missing '") + required + "'");
  return u;
}

}  // namespace detail

/// Range checks that do not need the network; network-size limits are checked when the experiment runs.
inline void validate(const ExperimentConfig& c) {
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) throw ConfigError("unknown experiment kind '" + c.kind + "'");
  if (c.level < 0 || c.level > 12) throw ConfigError("level out of range: " + std::to_string(c.level) + " (allowed 0..12)");
  if (c.modes < -1) throw ConfigError("truncation out of range: modes = " + std::to_string(c.modes));
  if (!(c.alpha >= 0.0)) throw ConfigError("alpha must be nonnegative");
  if (!(c.t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (c.steps < 1) throw ConfigError("steps must be at least 1");
  if (c.replicas < 1) throw ConfigError("replicas must be at least 1");
  if (c.record_modes < 0) throw ConfigError("record_modes must be nonnegative");
  if (c.out.empty()) throw ConfigError("output directory must be nonempty");
}

/// Reads the section for `kind` (or the only experiment section when `kind` is empty)
/// plus an optional [structure] section.
inline ExperimentConfig parse_config(const std::string& text, const std::string& kind = "") {
  const auto sections = detail::parse_sections(text);
  std::string chosen = kind;
  for (const auto& [name, sec] : sections) {
    const auto& kinds = experiment_kinds();
    if (name != "structure" && std::find(kinds.begin(), kinds.end(), name) == kinds.end()) {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  if (chosen.empty()) {
    for (const auto& [name, sec] : sections) {
      if (name == "structure") continue;
      if (!chosen.empty()) throw ConfigError("several experiment sections; name the one to run");
      chosen = name;
    }
    if (chosen.empty()) throw ConfigError("no experiment section in configuration");
  }
  const auto it = sections.find(chosen);
  if (it == sections.end()) throw ConfigError("configuration has no [" + chosen + "] section");

  ExperimentConfig c;
  c.kind = chosen;
  for (const auto& [key, value] : it->second) {
    if (key == "preset") c.preset = value;
    else if (key == "level") c.level = detail::parse_int(key, value);
    else if (key == "bc") {
      try {
        c.bc = parse_boundary(value);
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "alpha") c.alpha = detail::parse_double(key, value);
    else if (key == "modes") c.modes = detail::parse_int(key, value);
    else if (key == "t_end") c.t_end = detail::parse_double(key, value);
    else if (key == "steps") c.steps = detail::parse_int(key, value);
    else if (key == "replicas") c.replicas = detail::parse_int(key, value);
    else if (key == "seed") c.seed = detail::parse_seed(value);
    else if (key == "out") c.out = value;
    else if (key == "initial") {
      if (value == "fixed") c.initial = InitialCondition::Fixed;
      else if (value == "invariant") c.initial = InitialCondition::Invariant;
      else throw ConfigError("initial must be 'fixed' or 'invariant', got '" + value + "'");
    } else if (key == "u0") {
      for (const auto& w : detail::words(value)) c.u0.push_back(detail::parse_double(key, w));
    } else if (key == "vertices") {
      for (const auto& w : detail::words(value)) c.vertices.push_back(detail::parse_int(key, w));
    } else if (key == "record_modes") c.record_modes = detail::parse_int(key, value);
    else throw ConfigError("unknown key '" + key + "' in [" + chosen + "]");
  }
  if (const auto s = sections.find("structure"); s != sections.end()) c.structure = detail::parse_structure(s->second);
  validate(c);
  return c;
}

inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  if (c.structure) {
    const auto& u = *c.structure;
    out << "[structure]\nname = " << u.name << "\nweights =";
    for (double w : u.weights) out << " " << detail::format_double(w);
    out << "\na0 =";
    for (std::size_t i = 0; i < u.a0.size(); ++i) {
      if (i > 0) out << " |";
      for (double v : u.a0[i]) out << " " << detail::format_double(v);
    }
    out << "\ngluing =";
    for (const auto& g : u.gluing) out << " " << detail::format_cell_point(g.lhs) << "=" << detail::format_cell_point(g.rhs);
    out << "\nembedding =";
    for (const auto& p : u.embedding) out << " " << detail::format_cell_point(p);
    out << "\n\n";
  }
  out << "[" << c.kind << "]\n";
  out << "preset = " << c.preset << "\n";
  out << "level = " << c.level << "\n";
  out << "bc = " << to_string(c.bc) << "\n";
  out << "alpha = " << detail::format_double(c.alpha) << "\n";
  out << "modes = " << c.modes << "\n";
  out << "t_end = " << detail::format_double(c.t_end) << "\n";
  out << "steps = " << c.steps << "\n";
  out << "replicas = " << c.replicas << "\n";
  out << "seed = " << c.seed << "\n";
  out << "out = " << c.out << "\n";
  out << "initial = " << (c.initial == InitialCondition::Fixed ? "fixed" : "invariant") << "\n";
  if (!c.u0.empty()) {
    out << "u0 =";
    for (double v : c.u0) out << " " << detail::format_double(v);
    out << "\n";
  }
  if (!c.vertices.empty()) {
    out << "vertices =";
    for (int v : c.vertices) out << " " << v;
    out << "\n";
  }
  out << "record_modes = " << c.record_modes << "\n";
  return out.str();
}

}  // namespace fshe

#endif  // FSHE_CONFIG_HPP

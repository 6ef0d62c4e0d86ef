#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fblab/common.hpp"
#include "fblab/field.hpp"
#include "fblab/io.hpp"
#include "fblab/reaction.hpp"
#include "fblab/stability.hpp"

namespace fblab {

class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& msg)
      : Error(line > 0 ? "config line " + std::to_string(line) + ": " + msg : "config: " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Parsed key=value document. Keys inside "[section]" are stored as
/// "section.key"; "#" and ";" start comments.
struct ConfigDoc {
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, Entry> entries;

  bool has(const std::string& key) const { return entries.count(key) > 0; }
  int line_of(const std::string& key) const { return has(key) ? entries.at(key).line : 0; }
};

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline ConfigDoc parse_config_text(const std::string& text) {
  ConfigDoc doc;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError(line, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (doc.has(full)) throw ConfigError(line, "duplicate key '" + full + "'");
    doc.entries[full] = {value, line};
  }
  return doc;
}

enum class Experiment { profile, solve, stability, onephase, blowdown, window, figure1 };

inline std::optional<Experiment> experiment_from_string(const std::string& s) {
  static const std::map<std::string, Experiment> names = {
      {"profile", Experiment::profile},   {"solve", Experiment::solve},       {"stability", Experiment::stability},
      {"onephase", Experiment::onephase}, {"blowdown", Experiment::blowdown}, {"window", Experiment::window},
      {"figure1", Experiment::figure1}};
  const auto it = names.find(s);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::profile: return "profile";
    case Experiment::solve: return "solve";
    case Experiment::stability: return "stability";
    case Experiment::onephase: return "onephase";
    case Experiment::blowdown: return "blowdown";
    case Experiment::window: return "window";
    case Experiment::figure1: return "figure1";
  }
  return "?";
}

/// Far-field Dirichlet models: the 1D profile in t, an affine function of t,
/// or the signed distance-like ramp off a catenoid s = c cosh(t / c).
enum class FarField { profile, affine, catenoid };

/// Tolerances recognised in [tolerances]; each may be overridden by the
/// environment variable FBLAB_TOL_<NAME> (upper case).
inline const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> d = {
      {"newton", 1e-10},  {"spectral", 1e-8}, {"classify", 1e-3},
      {"residual", 1e-6}, {"mass", 1e-10},    {"harmonic", 1e-6}};
  return d;
}

inline constexpr const char* tolerance_env_prefix = "FBLAB_TOL_";

struct ExperimentConfig {
  Experiment experiment = Experiment::profile;
  std::string reaction = "poly2";
  int n = 3;
  AxiGrid grid{3, 65, 65, 8.0, -4.0, 4.0};
  // profile
  double a = 1.0;
  double halfwidth = 20.0;
  double step = 1e-3;
  // far field for solve / stability
  FarField far_field = FarField::profile;
  double far_slope = 1.0;
  double far_offset = 0.0;
  double far_scale = 2.0;
  bool truncation_study = true;
  // stability
  StabilityProbe probe{};
  int max_iter = 5000;
  // onephase
  double radius = 1.0;
  std::size_t cells_per_unit = 128;
  std::size_t boundary_samples = 401;
  // blowdown
  std::vector<double> epsilons{1.0, 0.5, 0.25, 0.125, 0.0625};
  std::size_t blowdown_nt = 2049;
  // window
  std::vector<int> dimensions{2, 3, 4, 5, 6, 7, 8};
  double schedule_R = 100.0;

  std::map<std::string, double> tolerances = default_tolerances();
  std::filesystem::path output_dir = "out";

  /// Canonical key=value echo, sorted; input to the config hash.
  std::map<std::string, std::string> echo;

  double tol(const std::string& name) const { return tolerances.at(name); }
};

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string canonical_echo(const std::map<std::string, std::string>& echo) {
  std::string out;
  for (const auto& [k, v] : echo) out += k + "=" + v + "\n";
  return out;
}

namespace detail {
struct Reader {
  const ConfigDoc& doc;
  std::map<std::string, bool> used;

  const ConfigDoc::Entry* find(const std::string& key) {
    const auto it = doc.entries.find(key);
    if (it == doc.entries.end()) return nullptr;
    used[key] = true;
    return &it->second;
  }
  double real(const std::string& key, double def) {
    const auto* e = find(key);
    if (!e) return def;
    try {
      std::size_t pos = 0;
      const double v = std::stod(e->value, &pos);
      if (pos != e->value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(e->line, "'" + key + "' expects a number, got '" + e->value + "'");
    }
  }
  long integer(const std::string& key, long def) {
    const auto* e = find(key);
    if (!e) return def;
    try {
      std::size_t pos = 0;
      const long v = std::stol(e->value, &pos);
      if (pos != e->value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(e->line, "'" + key + "' expects an integer, got '" + e->value + "'");
    }
  }
  std::string text(const std::string& key, const std::string& def) {
    const auto* e = find(key);
    return e ? e->value : def;
  }
  template <typename T, typename F>
  std::vector<T> list(const std::string& key, std::vector<T> def, F&& conv) {
    const auto* e = find(key);
    if (!e) return def;
    std::vector<T> out;
    std::istringstream in(e->value);
    std::string item;
    while (std::getline(in, item, ',')) {
      try {
        out.push_back(conv(trim(item)));
      } catch (const std::exception&) {
        throw ConfigError(e->line, "'" + key + "' has a bad list item '" + trim(item) + "'");
      }
    }
    if (out.empty()) throw ConfigError(e->line, "'" + key + "' is an empty list");
    return out;
  }
};
}  // namespace detail

/// Validates and converts a parsed document. `selected` is the experiment
/// chosen on the command line, if any. The environment lookup is a parameter
/// so tests can inject overrides.
inline ExperimentConfig make_config(const ConfigDoc& doc, std::optional<Experiment> selected = std::nullopt,
                                    const std::function<const char*(const char*)>& getenv_fn = std::getenv) {
  detail::Reader r{doc, {}};
  ExperimentConfig c;
  {
    const auto* e = r.find("experiment");
    if (e) {
      const auto ex = experiment_from_string(e->value);
      if (!ex) throw ConfigError(e->line, "unknown experiment '" + e->value + "'");
      if (selected && *selected != *ex)
        throw ConfigError(e->line, "config declares '" + e->value + "' but '" + to_string(*selected) + "' was requested");
      c.experiment = *ex;
    } else if (selected) {
      c.experiment = *selected;
    } else {
      throw ConfigError(0, "missing 'experiment'");
    }
  }
  c.reaction = r.text("reaction", c.reaction);
  if (c.reaction != "poly2" && c.reaction.rfind("table:", 0) != 0)
    throw ConfigError(doc.line_of("reaction"), "unknown reaction '" + c.reaction + "'");
  if (c.reaction.rfind("table:", 0) == 0 && !std::filesystem::exists(c.reaction.substr(6)))
    throw ConfigError(doc.line_of("reaction"), "reaction table '" + c.reaction.substr(6) + "' does not exist");

  c.n = static_cast<int>(r.integer("n", c.n));
  if (c.n < 2) throw ConfigError(doc.line_of("n"), "n must be at least 2");
  c.output_dir = r.text("output_dir", c.output_dir.string());

  c.grid.n = c.n;
  c.grid.ns = static_cast<std::size_t>(r.integer("grid.ns", static_cast<long>(c.grid.ns)));
  c.grid.nt = static_cast<std::size_t>(r.integer("grid.nt", static_cast<long>(c.grid.nt)));
  c.grid.s_max = r.real("grid.s_max", c.grid.s_max);
  c.grid.t_min = r.real("grid.t_min", c.grid.t_min);
  c.grid.t_max = r.real("grid.t_max", c.grid.t_max);
  try {
    c.grid.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(doc.line_of("grid.ns"), e.what());
  }

  c.a = r.real("profile.a", c.a);
  c.halfwidth = r.real("profile.halfwidth", c.halfwidth);
  c.step = r.real("profile.step", c.step);
  if (!(c.a > 0.0)) throw ConfigError(doc.line_of("profile.a"), "profile.a must be positive");
  if (!(c.halfwidth > 0.0 && c.step > 0.0)) throw ConfigError(doc.line_of("profile.step"), "profile.halfwidth and profile.step must be positive");

  const std::string ff = r.text("boundary.model", "profile");
  if (ff == "profile") c.far_field = FarField::profile;
  else if (ff == "affine") c.far_field = FarField::affine;
  else if (ff == "catenoid") c.far_field = FarField::catenoid;
  else throw ConfigError(doc.line_of("boundary.model"), "boundary.model must be 'profile', 'affine' or 'catenoid'");
  c.far_slope = r.real("boundary.slope", c.far_slope);
  c.far_offset = r.real("boundary.offset", c.far_offset);
  c.far_scale = r.real("boundary.scale", c.far_scale);
  if (!(c.far_scale > 0.0)) throw ConfigError(doc.line_of("boundary.scale"), "boundary.scale must be positive");
  c.truncation_study = r.integer("boundary.truncation_study", 1) != 0;

  c.probe.alpha = r.real("probe.alpha", c.n > 2 && c.n < 6 ? 0.5 * (0.5 * (c.n - 2) + std::sqrt(c.n - 2.0)) : 0.0);
  c.probe.R = r.real("probe.R", 2.0);
  c.probe.eps_inner = r.real("probe.eps_inner", 0.5);
  c.probe.eps0 = r.real("probe.eps0", 0.1);
  const std::string cut = r.text("probe.cutoff", "ball");
  if (cut == "ball") c.probe.cutoff = CutoffProfile::quintic_ball;
  else if (cut == "collar") c.probe.cutoff = CutoffProfile::boundary_collar;
  else throw ConfigError(doc.line_of("probe.cutoff"), "probe.cutoff must be 'ball' or 'collar'");
  c.probe.collar_width = r.real("probe.collar_width", 1.0);
  try {
    c.probe.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(doc.line_of("probe.alpha"), e.what());
  }
  c.max_iter = static_cast<int>(r.integer("stability.max_iter", c.max_iter));
  if (c.max_iter < 1) throw ConfigError(doc.line_of("stability.max_iter"), "stability.max_iter must be positive");

  c.radius = r.real("onephase.radius", c.radius);
  c.cells_per_unit = static_cast<std::size_t>(r.integer("onephase.cells_per_unit", static_cast<long>(c.cells_per_unit)));
  c.boundary_samples = static_cast<std::size_t>(r.integer("onephase.boundary_samples", static_cast<long>(c.boundary_samples)));
  if (!(c.radius > 0.0) || c.cells_per_unit < 8 || c.boundary_samples < 8)
    throw ConfigError(doc.line_of("onephase.radius"), "onephase parameters out of range");

  const auto to_d = [](const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  };
  const auto to_i = [](const std::string& s) {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  };
  c.epsilons = r.list<double>("blowdown.eps", c.epsilons, to_d);
  for (double e : c.epsilons)
    if (!(e > 0.0)) throw ConfigError(doc.line_of("blowdown.eps"), "blowdown.eps entries must be positive");
  c.blowdown_nt = static_cast<std::size_t>(r.integer("blowdown.nt", static_cast<long>(c.blowdown_nt)));
  if (c.blowdown_nt < 3) throw ConfigError(doc.line_of("blowdown.nt"), "blowdown.nt must be at least 3");
  c.dimensions = r.list<int>("window.dimensions", c.dimensions, to_i);
  for (int d : c.dimensions)
    if (d < 2) throw ConfigError(doc.line_of("window.dimensions"), "window.dimensions entries must be at least 2");
  c.schedule_R = r.real("window.R", c.schedule_R);

  for (const auto& [key, entry] : doc.entries) {
    if (key.rfind("tolerances.", 0) != 0) continue;
    const std::string name = key.substr(11);
    if (!c.tolerances.count(name)) throw ConfigError(entry.line, "unknown tolerance '" + name + "'");
    c.tolerances[name] = r.real(key, 0.0);
  }
  for (auto& [name, value] : c.tolerances) {
    std::string var = tolerance_env_prefix;
    for (char ch : name) var += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (const char* env = getenv_fn(var.c_str())) {
      try {
        value = std::stod(env);
      } catch (const std::exception&) {
        throw ConfigError(0, "environment " + var + " is not a number");
      }
    }
    if (!(value > 0.0)) throw ConfigError(doc.line_of("tolerances." + name), "tolerance '" + name + "' must be positive");
  }

  for (const auto& [key, entry] : doc.entries)
    if (!r.used.count(key)) throw ConfigError(entry.line, "unknown key '" + key + "'");

  for (const auto& [key, entry] : doc.entries) c.echo[key] = entry.value;
  c.echo["experiment"] = to_string(c.experiment);
  for (const auto& [name, value] : c.tolerances) c.echo["tolerances." + name] = io::fmt(value);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    std::optional<Experiment> selected = std::nullopt) {
  if (!std::filesystem::exists(path)) throw ConfigError(0, "file '" + path.string() + "' does not exist");
  return make_config(parse_config_text(io::read_text(path)), selected);
}

inline ReactionTerm make_reaction(const ExperimentConfig& c) {
  if (c.reaction == "poly2") return make_polynomial_beta();
  return io::read_reaction_table(c.reaction.substr(6));
}

}  // namespace fblab

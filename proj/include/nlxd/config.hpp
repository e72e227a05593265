#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "nlxd/grid.hpp"
#include "nlxd/initial.hpp"
#include "nlxd/kernels.hpp"
#include "nlxd/scheme.hpp"

namespace nlxd {

struct ConfigError : std::runtime_error {
  std::vector<std::string> errors;
  explicit ConfigError(std::vector<std::string> errs)
      : std::runtime_error(join(errs)), errors(std::move(errs)) {}
  static std::string join(const std::vector<std::string>& errs) {
    std::string s = "configuration invalid:";
    for (const auto& e : errs) s += "\n  - " + e;
    return s;
  }
};

/// One parsed config value: scalar, string, flat array, or matrix.
using ConfigValue = std::variant<double, bool, std::string, std::vector<double>,
                                 std::vector<std::vector<double>>>;

/// Sectioned key-value text format: [section] headers, key = value lines,
/// '#' comments. Values: numbers, true/false, "strings" or bare words,
/// [1, 2] arrays and [[1,2],[3,4]] matrices.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file: " + path});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
  }

  static ConfigFile parse_string(const std::string& text) {
    ConfigFile cfg;
    std::vector<std::string> errors;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip(line);
      if (s.empty() || s[0] == '#') continue;
      if (s.front() == '[') {
        if (s.back() != ']') {
          errors.push_back("line " + std::to_string(lineno) + ": malformed section header");
          continue;
        }
        section = strip(s.substr(1, s.size() - 2));
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
        continue;
      }
      const std::string key = strip(s.substr(0, eq));
      const std::string raw = strip(s.substr(eq + 1));
      try {
        cfg.data_[section][key] = parse_value(raw);
      } catch (const std::exception& e) {
        errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    if (!errors.empty()) throw ConfigError(errors);
    return cfg;
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = data_.find(section);
    return s != data_.end() && s->second.count(key) > 0;
  }

  const ConfigValue& get(const std::string& section, const std::string& key) const {
    return data_.at(section).at(key);
  }

 private:
  static std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static ConfigValue parse_value(const std::string& raw) {
    if (raw.empty()) throw std::runtime_error("empty value");
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.front() == '"') {
      if (raw.size() < 2 || raw.back() != '"') throw std::runtime_error("unterminated string");
      return raw.substr(1, raw.size() - 2);
    }
    if (raw.front() == '[') {
      if (raw.back() != ']') throw std::runtime_error("unterminated array");
      const std::string body = strip(raw.substr(1, raw.size() - 2));
      if (!body.empty() && body.front() == '[') {
        std::vector<std::vector<double>> rows;
        std::size_t pos = 0;
        while (pos < body.size()) {
          if (body[pos] == ',' || std::isspace(static_cast<unsigned char>(body[pos]))) {
            ++pos;
            continue;
          }
          if (body[pos] != '[') throw std::runtime_error("malformed matrix");
          const auto close = body.find(']', pos);
          if (close == std::string::npos) throw std::runtime_error("unterminated matrix row");
          rows.push_back(parse_number_list(body.substr(pos + 1, close - pos - 1)));
          pos = close + 1;
        }
        return rows;
      }
      return parse_number_list(body);
    }
    try {
      std::size_t used = 0;
      const double x = std::stod(raw, &used);
      if (used == raw.size()) return x;
    } catch (const std::exception&) {
      // not a number; fall through to the bare-word case
    }
    for (char c : raw)
      if (std::isspace(static_cast<unsigned char>(c)))
        throw std::runtime_error("cannot parse value: " + raw);
    return raw;
  }

  static std::vector<double> parse_number_list(const std::string& body) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(body);
    while (std::getline(in, item, ',')) {
      const std::string t = strip(item);
      if (t.empty()) continue;
      out.push_back(std::stod(t));
    }
    return out;
  }

  std::map<std::string, std::map<std::string, ConfigValue>> data_;
};

struct InitialSpec {
  std::string generator = "constant";  // constant|cosine_mode|random_positive|gaussian_bumps|snapshot
  int species = 1;
  std::vector<double> values{1.0};
  double base = 1.0;
  double amp = 0.5;
  double width = 0.1;
  std::uint64_t seed = 0;
  std::string snapshot_path;
};

struct OutputSpec {
  std::string directory = ".";
  std::vector<double> times;
  int stride = 0;
  bool emit_snapshots = false;
};

struct ExperimentSpec {
  std::vector<double> epsilons;
  double perturbation_amp = 1e-3;
  std::vector<double> tau_list;
  std::vector<double> n_list;
};

struct RunConfig {
  TorusGrid grid;
  double sigma = 1.0;
  SystemMode mode = SystemMode::Nonlocal;
  KernelSpec kernel;
  std::optional<std::vector<double>> explicit_pi;
  SchemeConfig scheme;
  InitialSpec initial;
  OutputSpec output;
  ExperimentSpec experiment;
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const ConfigFile& cfg) : cfg_(cfg) {}

  template <typename T>
  T get(const std::string& section, const std::string& key, T fallback) {
    if (!cfg_.has(section, key)) return fallback;
    return expect<T>(section, key);
  }

  template <typename T>
  std::optional<T> maybe(const std::string& section, const std::string& key) {
    if (!cfg_.has(section, key)) return std::nullopt;
    const auto* v = std::get_if<T>(&cfg_.get(section, key));
    if (!v) {
      fail(section + "." + key + " has the wrong type");
      return std::nullopt;
    }
    return *v;
  }

  void fail(const std::string& msg) { errors_.push_back(msg); }
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  template <typename T>
  T expect(const std::string& section, const std::string& key) {
    const auto* v = std::get_if<T>(&cfg_.get(section, key));
    if (!v) {
      fail(section + "." + key + " has the wrong type");
      return T{};
    }
    return *v;
  }

  const ConfigFile& cfg_;
  std::vector<std::string> errors_;
};

}  // namespace detail

/// Fully validated run configuration; reports every violation at once with a
/// field path, not just the first.
inline RunConfig load_run_config(const ConfigFile& cfg) {
  detail::ConfigReader r(cfg);
  RunConfig run;

  const int dim = static_cast<int>(r.get<double>("grid", "dim", 1.0));
  const int cells = static_cast<int>(r.get<double>("grid", "cells", 64.0));
  const double period = r.get<double>("grid", "period", 1.0);
  if (dim != 1 && dim != 2) r.fail("grid.dim must be 1 or 2");
  if (cells < 8 || cells % 2 != 0) r.fail("grid.cells must be even and >= 8");
  if (!(period > 0.0)) r.fail("grid.period must be > 0");
  if (r.errors().empty()) run.grid = make_grid(dim, cells, period);

  run.sigma = r.get<double>("model", "sigma", 1.0);
  if (!(run.sigma > 0.0)) r.fail("model.sigma must be > 0");
  const std::string mode = r.get<std::string>("model", "mode", "nonlocal");
  if (mode == "local")
    run.mode = SystemMode::Local;
  else if (mode == "nonlocal")
    run.mode = SystemMode::Nonlocal;
  else
    r.fail("model.mode must be nonlocal or local");

  const std::string family = r.get<std::string>("model", "kernel", "gaussian");
  if (family == "gaussian")
    run.kernel.family = KernelFamily::Gaussian;
  else if (family == "indicator_ball")
    run.kernel.family = KernelFamily::IndicatorBall;
  else if (family == "cauchy")
    run.kernel.family = KernelFamily::Cauchy;
  else if (family == "mollifier")
    run.kernel.family = KernelFamily::Mollifier;
  else
    r.fail("model.kernel must be gaussian, indicator_ball, cauchy, or mollifier");
  run.kernel.epsilon = r.get<double>("model", "epsilon", 0.1);
  run.kernel.radius = r.get<double>("model", "radius", 0.25);
  if (run.kernel.family == KernelFamily::Gaussian && !(run.kernel.epsilon > 0.0))
    r.fail("model.epsilon must be > 0");
  const std::string profile = r.get<std::string>("model", "profile", "quartic");
  try {
    run.kernel.profile = MollifierProfile::named(profile);
  } catch (const std::exception& e) {
    r.fail(std::string("model.profile: ") + e.what());
  }

  if (auto rows = r.maybe<std::vector<std::vector<double>>>("model", "interaction")) {
    const int n = static_cast<int>(rows->size());
    std::vector<double> entries;
    bool ok = true;
    for (const auto& row : *rows) {
      if (static_cast<int>(row.size()) != n) {
        r.fail("model.interaction must be a square matrix");
        ok = false;
        break;
      }
      entries.insert(entries.end(), row.begin(), row.end());
    }
    if (ok) {
      try {
        run.kernel.interaction = InteractionMatrix(n, entries);
      } catch (const std::exception& e) {
        r.fail(std::string("model.interaction: ") + e.what());
      }
    }
  }
  run.explicit_pi = r.maybe<std::vector<double>>("model", "pi");

  const std::string variant = r.get<std::string>("scheme", "variant", "implicit_entropy");
  if (variant == "implicit_entropy")
    run.scheme.variant = SchemeVariant::ImplicitEntropy;
  else if (variant == "semi_implicit")
    run.scheme.variant = SchemeVariant::SemiImplicit;
  else
    r.fail("scheme.variant must be implicit_entropy or semi_implicit");
  run.scheme.tau = r.get<double>("scheme", "tau", 1e-3);
  run.scheme.t_end = r.get<double>("scheme", "t_end", 0.1);
  run.scheme.newton_tol = r.get<double>("scheme", "newton_tol", 1e-11);
  run.scheme.newton_max_iter = static_cast<int>(r.get<double>("scheme", "newton_max_iter", 50.0));
  run.scheme.delta_reg = r.get<double>("scheme", "delta_reg", 0.0);
  run.scheme.u_floor = r.get<double>("scheme", "u_floor", 1e-12);
  const std::string avg = r.get<std::string>("scheme", "flux_average", "arithmetic");
  if (avg == "arithmetic")
    run.scheme.flux_average = FluxAverage::Arithmetic;
  else if (avg == "upwind")
    run.scheme.flux_average = FluxAverage::Upwind;
  else
    r.fail("scheme.flux_average must be arithmetic or upwind");
  if (!(run.scheme.tau > 0.0)) r.fail("scheme.tau must be > 0");
  if (run.scheme.t_end < 0.0) r.fail("scheme.t_end must be >= 0");
  if (!(run.scheme.newton_tol > 0.0)) r.fail("scheme.newton_tol must be > 0");

  run.initial.generator = r.get<std::string>("initial", "generator", "constant");
  run.initial.species = static_cast<int>(
      r.get<double>("initial", "species",
                    static_cast<double>(run.kernel.interaction.n)));
  run.initial.values = r.get<std::vector<double>>("initial", "values", {1.0});
  run.initial.base = r.get<double>("initial", "base", 1.0);
  run.initial.amp = r.get<double>("initial", "amp", 0.5);
  run.initial.width = r.get<double>("initial", "width", 0.1);
  run.initial.seed = static_cast<std::uint64_t>(r.get<double>("initial", "seed", 0.0));
  run.initial.snapshot_path = r.get<std::string>("initial", "snapshot", "");
  if (run.initial.species != run.kernel.interaction.n)
    r.fail("initial.species must match the interaction matrix size");

  run.output.directory = r.get<std::string>("output", "directory", ".");
  run.output.times = r.get<std::vector<double>>("output", "times", {});
  run.output.stride = static_cast<int>(r.get<double>("output", "stride", 0.0));
  run.output.emit_snapshots = r.get<bool>("output", "emit_snapshots", false);

  run.experiment.epsilons = r.get<std::vector<double>>("experiment", "epsilons", {});
  run.experiment.perturbation_amp = r.get<double>("experiment", "perturbation_amp", 1e-3);
  run.experiment.tau_list = r.get<std::vector<double>>("experiment", "tau_list", {});
  run.experiment.n_list = r.get<std::vector<double>>("experiment", "n_list", {});

  if (!r.errors().empty()) throw ConfigError(r.errors());
  return run;
}

inline RunConfig parse_config(const std::string& path) {
  return load_run_config(ConfigFile::parse_file(path));
}

/// Resolves the reversible measure: explicit pi validated against detailed
/// balance of the interaction matrix, otherwise solved from it.
inline ReversibleMeasure resolve_pi(const RunConfig& run) {
  if (run.explicit_pi) {
    ReversibleMeasure pi(*run.explicit_pi);
    const auto& a = run.kernel.interaction;
    for (int i = 0; i < a.n; ++i)
      for (int j = 0; j < a.n; ++j)
        if (std::abs(pi[i] * a(i, j) - pi[j] * a(j, i)) > 1e-10 * std::max(a.max_abs(), 1.0))
          throw std::invalid_argument("model.pi does not satisfy detailed balance");
    return pi;
  }
  return solve_reversible_measure(run.kernel.interaction);
}

inline FieldSet build_initial(const RunConfig& run, const TorusGrid& grid);

}  // namespace nlxd

/// @file config.cpp
/// @brief Key bindings, parsing, validation and echo of RunConfig.
#include "slipflow/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "slipflow/errors.hpp"

namespace slipflow::harness {

namespace {

std::string trim(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& path, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(path, "expected a number, got '" + text + "'");
  }
  return v;
}

template <class Int>
Int parse_int(const std::string& path, const std::string& text) {
  const std::string s = trim(text);
  Int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(path, "expected an integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& path, const std::string& text) {
  std::string s = trim(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ConfigError(path, "expected true or false, got '" + text + "'");
}

std::vector<int> parse_int_list(const std::string& path, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int<int>(path, item));
  if (out.empty()) throw ConfigError(path, "expected a comma-separated list of integers");
  return out;
}

std::string format_int_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Binding {
  std::string section;
  std::string key;
  bool trajectory;  // part of the checkpoint hash
  std::function<void(RunConfig&, const std::string& path, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;  // empty: write-only alias
};

Binding real(std::string sec, std::string key, bool traj, double RunConfig::*outer) {
  return {std::move(sec), std::move(key), traj,
          [outer](RunConfig& c, const std::string& p, const std::string& v) {
            c.*outer = parse_double(p, v);
          },
          [outer](const RunConfig& c) { return format_double(c.*outer); }};
}

template <class S>
Binding real(std::string sec, std::string key, bool traj, S RunConfig::*outer, double S::*inner) {
  return {std::move(sec), std::move(key), traj,
          [outer, inner](RunConfig& c, const std::string& p, const std::string& v) {
            (c.*outer).*inner = parse_double(p, v);
          },
          [outer, inner](const RunConfig& c) { return format_double((c.*outer).*inner); }};
}

template <class S, class Int>
Binding integer(std::string sec, std::string key, bool traj, S RunConfig::*outer, Int S::*inner) {
  return {std::move(sec), std::move(key), traj,
          [outer, inner](RunConfig& c, const std::string& p, const std::string& v) {
            (c.*outer).*inner = parse_int<Int>(p, v);
          },
          [outer, inner](const RunConfig& c) { return std::to_string((c.*outer).*inner); }};
}

template <class Int>
Binding integer(std::string sec, std::string key, bool traj, Int RunConfig::*outer) {
  return {std::move(sec), std::move(key), traj,
          [outer](RunConfig& c, const std::string& p, const std::string& v) {
            c.*outer = parse_int<Int>(p, v);
          },
          [outer](const RunConfig& c) { return std::to_string(c.*outer); }};
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> b;
    // grid
    b.push_back({"grid", "n", true,
                 [](RunConfig& c, const std::string& p, const std::string& v) {
                   c.cells.fill(parse_int<int>(p, v));
                 },
                 {}});
    const char* axes = "xyz";
    for (int a = 0; a < 3; ++a) {
      b.push_back({"grid", std::string("n") + axes[a], true,
                   [a](RunConfig& c, const std::string& p, const std::string& v) {
                     c.cells[a] = parse_int<int>(p, v);
                   },
                   [a](const RunConfig& c) { return std::to_string(c.cells[a]); }});
    }
    for (int a = 0; a < 3; ++a) {
      b.push_back({"grid", std::string("l") + axes[a], true,
                   [a](RunConfig& c, const std::string& p, const std::string& v) {
                     c.extent[a] = parse_double(p, v);
                   },
                   [a](const RunConfig& c) { return format_double(c.extent[a]); }});
    }
    b.push_back(integer("grid", "ghost", true, &RunConfig::ghost));
    // eos
    b.push_back(real("eos", "a", true, &RunConfig::eos, &EosParams::a));
    b.push_back(real("eos", "gamma", true, &RunConfig::eos, &EosParams::gamma));
    b.push_back(real("eos", "mu", true, &RunConfig::eos, &EosParams::mu));
    b.push_back(real("eos", "lambda", true, &RunConfig::eos, &EosParams::lambda));
    b.push_back(real("eos", "rho_bar", true, &RunConfig::eos, &EosParams::rho_bar));
    // numerics
    b.push_back(real("numerics", "cfl_advective", true, &RunConfig::control,
                     &StepControl::cfl_advective));
    b.push_back(real("numerics", "cfl_viscous", true, &RunConfig::control,
                     &StepControl::cfl_viscous));
    b.push_back(real("numerics", "dt_min", true, &RunConfig::control, &StepControl::dt_min));
    b.push_back(real("numerics", "dt_max", true, &RunConfig::control, &StepControl::dt_max));
    b.push_back(real("numerics", "t_end", false, &RunConfig::control, &StepControl::t_end));
    b.push_back(integer("numerics", "max_steps", false, &RunConfig::control,
                        &StepControl::max_steps));
    b.push_back(real("numerics", "vacuum_floor", true, &RunConfig::vacuum_floor));
    b.push_back(real("numerics", "stokes_tol", true, &RunConfig::stokes_tol));
    // initial data
    b.push_back({"initial", "preset", true,
                 [](RunConfig& c, const std::string& p, const std::string& v) {
                   try {
                     c.initial.preset = parse_preset(trim(v));
                   } catch (const ConfigError&) {
                     throw ConfigError(p, "unknown preset '" + trim(v) + "'");
                   }
                 },
                 [](const RunConfig& c) { return std::string(preset_name(c.initial.preset)); }});
    b.push_back(real("initial", "amplitude", true, &RunConfig::initial, &PresetParams::amplitude));
    b.push_back(real("initial", "rho_star", true, &RunConfig::initial, &PresetParams::rho_star));
    b.push_back(real("initial", "vacuum_radius", true, &RunConfig::initial,
                     &PresetParams::vacuum_radius));
    b.push_back(real("initial", "vacuum_ramp", true, &RunConfig::initial,
                     &PresetParams::vacuum_ramp));
    // Lyapunov weights
    b.push_back(real("lyapunov", "D1", true, &RunConfig::weights, &LyapunovWeights::D1));
    b.push_back(real("lyapunov", "D2", true, &RunConfig::weights, &LyapunovWeights::D2));
    b.push_back(real("lyapunov", "D3", true, &RunConfig::weights, &LyapunovWeights::D3));
    b.push_back(real("lyapunov", "D4", true, &RunConfig::weights, &LyapunovWeights::D4));
    b.push_back(real("lyapunov", "D5", true, &RunConfig::weights, &LyapunovWeights::D5));
    // output
    b.push_back({"output", "dir", false,
                 [](RunConfig& c, const std::string&, const std::string& v) {
                   c.output_dir = trim(v);
                 },
                 [](const RunConfig& c) { return c.output_dir.string(); }});
    b.push_back(integer("output", "sample_every", true, &RunConfig::sample_every));
    b.push_back(integer("output", "checkpoint_every", false, &RunConfig::checkpoint_every));
    b.push_back({"output", "plots", false,
                 [](RunConfig& c, const std::string& p, const std::string& v) {
                   c.plots = parse_bool(p, v);
                 },
                 [](const RunConfig& c) { return std::string(c.plots ? "true" : "false"); }});
    b.push_back(integer("run", "seed", true, &RunConfig::seed));
    // analysis
    using A = AnalysisConfig;
    const auto an = &RunConfig::analysis;
    b.push_back(real("analysis", "fit_r2", false, an, &A::fit_r2));
    b.push_back(real("analysis", "linf_fit_r2", false, an, &A::linf_fit_r2));
    b.push_back(real("analysis", "rate_agreement", false, an, &A::rate_agreement));
    b.push_back(real("analysis", "energy_balance_tol", false, an, &A::energy_balance_tol));
    b.push_back(real("analysis", "mass_tol", false, an, &A::mass_tol));
    b.push_back(real("analysis", "momentum_residual_tol", false, an, &A::momentum_residual_tol));
    b.push_back(real("analysis", "lower_bound_slack", false, an, &A::lower_bound_slack));
    b.push_back(real("analysis", "vacuum_tol", false, an, &A::vacuum_tol));
    b.push_back(real("analysis", "grad_rho_ratio", false, an, &A::grad_rho_ratio));
    b.push_back(real("analysis", "rho_hat", false, an, &A::rho_hat));
    b.push_back(integer("analysis", "remeasure_cells", false, an, &A::remeasure_cells));
    b.push_back(real("analysis", "remeasure_t_end", false, an, &A::remeasure_t_end));
    b.push_back(real("analysis", "remeasure_tol", false, an, &A::remeasure_tol));
    b.push_back({"analysis", "convergence_cells", false,
                 [](RunConfig& c, const std::string& p, const std::string& v) {
                   c.analysis.convergence_cells = parse_int_list(p, v);
                 },
                 [](const RunConfig& c) { return format_int_list(c.analysis.convergence_cells); }});
    b.push_back(real("analysis", "convergence_t_end", false, an, &A::convergence_t_end));
    b.push_back(real("analysis", "convergence_balance_tol", false, an,
                     &A::convergence_balance_tol));
    b.push_back(real("analysis", "convergence_balance_factor", false, an,
                     &A::convergence_balance_factor));
    b.push_back(real("analysis", "convergence_residual_factor", false, an,
                     &A::convergence_residual_factor));
    b.push_back({"analysis", "probe_cells", false,
                 [](RunConfig& c, const std::string& p, const std::string& v) {
                   c.analysis.probe_cells = parse_int_list(p, v);
                 },
                 [](const RunConfig& c) { return format_int_list(c.analysis.probe_cells); }});
    b.push_back(integer("analysis", "probe_trials", false, an, &A::probe_trials));
    b.push_back(real("analysis", "probe_drift", false, an, &A::probe_drift));
    return b;
  }();
  return table;
}

const Binding* find_binding(const std::string& section, const std::string& key) {
  for (const Binding& b : bindings()) {
    if (b.section == section && b.key == key) return &b;
  }
  return nullptr;
}

// Resolves a key given outside any section.
const Binding& resolve_bare(const std::string& key) {
  const Binding* hit = nullptr;
  std::string sections;
  for (const Binding& b : bindings()) {
    if (b.key != key) continue;
    sections += (sections.empty() ? "" : ", ") + b.section;
    if (hit != nullptr) {
      throw ConfigError(key, "ambiguous key; qualify it with one of the sections " + sections);
    }
    hit = &b;
  }
  if (hit == nullptr) throw ConfigError(key, "unknown key");
  return *hit;
}

// The typographic minus sign is accepted as an ASCII hyphen.
std::string normalize_minus(std::string text) {
  const std::string minus = "\xE2\x88\x92";
  for (std::size_t pos = text.find(minus); pos != std::string::npos; pos = text.find(minus, pos)) {
    text.replace(pos, minus.size(), "-");
  }
  return text;
}

void check_positive(const std::string& path, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path, "must be positive and finite");
}

void check_cells_list(const std::string& path, const std::vector<int>& cells) {
  for (int n : cells) {
    if (n < 4) throw ConfigError(path, "every resolution needs at least 4 cells");
  }
}

std::string render(const RunConfig& cfg, bool trajectory_only) {
  std::string out;
  std::string current;
  for (const Binding& b : bindings()) {
    if (!b.get || (trajectory_only && !b.trajectory)) continue;
    if (b.section != current) {
      out += (out.empty() ? "[" : "\n[") + b.section + "]\n";
      current = b.section;
    }
    out += b.key + " = " + b.get(cfg) + "\n";
  }
  return out;
}

}  // namespace

GridSpec RunConfig::grid() const { return build_grid(extent, cells, ghost); }

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(normalize_minus(text));
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", "line " + std::to_string(e.line()) + ": " + e.message());
  }

  RunConfig cfg;
  for (const auto& [name, node] : tree) {
    if (node.empty() && !node.data().empty()) {
      const Binding& b = resolve_bare(name);
      b.set(cfg, b.section + "." + b.key, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) {
      const std::string path = name + "." + key;
      const Binding* b = find_binding(name, key);
      if (b == nullptr) {
        const bool known_section = std::any_of(bindings().begin(), bindings().end(),
                                               [&](const Binding& x) { return x.section == name; });
        throw ConfigError(path, known_section ? "unknown key" : "unknown section '" + name + "'");
      }
      b->set(cfg, path, leaf.data());
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const RunConfig& cfg) {
  for (int a = 0; a < 3; ++a) {
    const std::string ax(1, "xyz"[a]);
    if (cfg.cells[a] < 4) throw ConfigError("grid.n" + ax, "at least 4 cells required");
    check_positive("grid.l" + ax, cfg.extent[a]);
  }
  // The limited reconstruction reads two cells upwind.
  if (cfg.ghost < 2) throw ConfigError("grid.ghost", "the advection limiter needs ghost width 2");
  validate(cfg.eos);
  validate(cfg.control);
  validate(cfg.weights);
  check_positive("numerics.vacuum_floor", cfg.vacuum_floor);
  if (!(cfg.stokes_tol > 0.0 && cfg.stokes_tol < 1.0)) {
    throw ConfigError("numerics.stokes_tol", "must lie in (0, 1)");
  }
  if (!(cfg.initial.amplitude >= 0.0) || !std::isfinite(cfg.initial.amplitude)) {
    throw ConfigError("initial.amplitude", "must be non-negative and finite");
  }
  check_positive("initial.rho_star", cfg.initial.rho_star);
  check_positive("initial.vacuum_radius", cfg.initial.vacuum_radius);
  check_positive("initial.vacuum_ramp", cfg.initial.vacuum_ramp);
  if (cfg.output_dir.empty()) throw ConfigError("output.dir", "must not be empty");
  if (cfg.sample_every < 1) throw ConfigError("output.sample_every", "must be >= 1");
  if (cfg.checkpoint_every < 0) throw ConfigError("output.checkpoint_every", "must be >= 0");

  const AnalysisConfig& a = cfg.analysis;
  if (!(a.fit_r2 > 0.0 && a.fit_r2 <= 1.0)) throw ConfigError("analysis.fit_r2", "must lie in (0, 1]");
  if (!(a.linf_fit_r2 > 0.0 && a.linf_fit_r2 <= 1.0)) {
    throw ConfigError("analysis.linf_fit_r2", "must lie in (0, 1]");
  }
  if (!(a.rate_agreement >= 1.0)) throw ConfigError("analysis.rate_agreement", "must be >= 1");
  check_positive("analysis.energy_balance_tol", a.energy_balance_tol);
  check_positive("analysis.mass_tol", a.mass_tol);
  check_positive("analysis.momentum_residual_tol", a.momentum_residual_tol);
  if (!(a.lower_bound_slack >= 0.0 && a.lower_bound_slack < 1.0)) {
    throw ConfigError("analysis.lower_bound_slack", "must lie in [0, 1)");
  }
  check_positive("analysis.vacuum_tol", a.vacuum_tol);
  check_positive("analysis.grad_rho_ratio", a.grad_rho_ratio);
  if (!(a.rho_hat > 0.0)) throw ConfigError("analysis.rho_hat", "must be positive");
  if (a.remeasure_cells != 0 && a.remeasure_cells < 4) {
    throw ConfigError("analysis.remeasure_cells", "must be 0 (off) or at least 4");
  }
  check_positive("analysis.remeasure_t_end", a.remeasure_t_end);
  check_positive("analysis.remeasure_tol", a.remeasure_tol);
  check_cells_list("analysis.convergence_cells", a.convergence_cells);
  if (a.convergence_cells.size() != 3) {
    throw ConfigError("analysis.convergence_cells", "exactly three resolutions required");
  }
  check_positive("analysis.convergence_t_end", a.convergence_t_end);
  check_positive("analysis.convergence_balance_tol", a.convergence_balance_tol);
  check_positive("analysis.convergence_balance_factor", a.convergence_balance_factor);
  check_positive("analysis.convergence_residual_factor", a.convergence_residual_factor);
  check_cells_list("analysis.probe_cells", a.probe_cells);
  if (a.probe_trials < 10) throw ConfigError("analysis.probe_trials", "at least 10 trials");
  check_positive("analysis.probe_drift", a.probe_drift);
}

std::string config_echo(const RunConfig& cfg) { return render(cfg, false); }

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : render(cfg, true)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Binding& b : bindings()) keys.push_back(b.section + "." + b.key);
  return keys;
}

}  // namespace slipflow::harness

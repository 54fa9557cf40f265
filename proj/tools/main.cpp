/// @file main.cpp
/// @brief `slipflow` command-line tool: run experiments, verify, fit CSV columns.
///
/// Exit codes: 0 pass, 1 assertion failure, 2 configuration error,
/// 3 numerical blowup or stiffness.
#include <charconv>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slipflow/diagnostics.hpp"
#include "slipflow/errors.hpp"
#include "slipflow/harness/config.hpp"
#include "slipflow/harness/experiments.hpp"
#include "slipflow/harness/verify.hpp"

namespace sh = slipflow::harness;

namespace {

enum Exit { kPass = 0, kAssertion = 1, kConfig = 2, kNumerical = 3 };

std::pair<double, double> parse_window(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw slipflow::ConfigError("--window", "expected a,b");
  const auto num = [&](std::string_view s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw slipflow::ConfigError("--window", "not a number: '" + std::string(s) + "'");
    }
    return v;
  };
  const std::string_view sv(text);
  return {num(sv.substr(0, comma)), num(sv.substr(comma + 1))};
}

int cmd_run(const std::string& name, const std::string& config, const std::string& out,
            const std::string& resume, bool plots, bool ignore_hash, bool quiet) {
  const sh::Experiment e = sh::parse_experiment(name);
  sh::RunConfig cfg = sh::load_config(config);
  if (!out.empty()) cfg.output_dir = out;
  sh::RunOptions opts;
  if (!resume.empty()) opts.resume = resume;
  if (plots) opts.plots = true;
  opts.ignore_config_hash = ignore_hash;
  opts.log = quiet ? nullptr : &std::cerr;

  const sh::ExperimentReport rep = sh::run_experiment(e, cfg, opts);
  for (const sh::Assertion& a : rep.assertions) {
    std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << "  value=" << a.value
              << "  threshold=" << a.threshold;
    if (!a.detail.empty()) std::cout << "  (" << a.detail << ")";
    std::cout << '\n';
  }
  std::cout << "summary: " << rep.summary_path.string() << '\n';
  if (rep.passed()) return kPass;
  nlohmann::json failures = rep.failures();
  std::cout << nlohmann::json{{"experiment", rep.experiment}, {"failures", failures}}.dump() << '\n';
  return kAssertion;
}

int cmd_verify(std::uint64_t seed) {
  const auto results = sh::verify_suite(seed, &std::cout);
  std::vector<std::string> failed;
  for (const auto& a : results) {
    if (!a.passed) failed.push_back(a.name);
  }
  std::cout << (failed.empty() ? "verify: all " : "verify: ") << results.size() - failed.size()
            << "/" << results.size() << " checks passed\n";
  if (failed.empty()) return kPass;
  std::cout << nlohmann::json{{"failures", failed}}.dump() << '\n';
  return kAssertion;
}

int cmd_fit(const std::string& csv, const std::string& column, const std::string& window) {
  const auto records = slipflow::read_diagnostics_csv(csv);
  std::vector<double> t, y;
  for (const auto& r : records) {
    t.push_back(r.t);
    y.push_back(slipflow::record_value(r, column));
  }
  const auto [t0, t1] = window.empty() ? slipflow::default_fit_window(t) : parse_window(window);
  const slipflow::DecayFit f = slipflow::fit_decay(t, y, t0, t1);
  nlohmann::json j{{"column", column}, {"t0", f.t0},           {"t1", f.t1},
                   {"C", f.C},         {"eta", f.eta},         {"r2", f.r2},
                   {"samples", f.samples}, {"excluded", f.excluded}, {"constant", f.constant},
                   {"accepted", f.accepted}};
  if (!std::isfinite(f.r2)) j["r2"] = nullptr;
  std::cout << j.dump(2) << '\n';
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slipflow: compressible Navier-Stokes with Navier-slip walls, stability laboratory"};
  app.require_subcommand(1);

  std::string experiment, config, out, resume;
  bool plots = false, ignore_hash = false, quiet = false;
  auto* run = app.add_subcommand("run", "Run a preset experiment");
  run->add_option("experiment", experiment,
                  "theorem1 | theorem1-positive | theorem2-vacuum | convergence | probes")
      ->required();
  run->add_option("--config", config, "Config file (INI key = value)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides output.dir)");
  run->add_option("--resume", resume, "Resume from a checkpoint file")->check(CLI::ExistingFile);
  run->add_flag("--plots", plots, "Write SVG plots");
  run->add_flag("--ignore-config-hash", ignore_hash, "Resume even if the config hash differs");
  run->add_flag("-q,--quiet", quiet, "No progress output on stderr");

  std::uint64_t seed = 20240607;
  auto* verify = app.add_subcommand("verify", "Operator oracles, quadrature and inequality probes");
  verify->add_option("--seed", seed, "Random seed for the randomized checks");

  std::string csv, column, window;
  auto* fit = app.add_subcommand("fit", "Exponential decay fit of one CSV column");
  fit->add_option("--csv", csv, "Diagnostics CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--column", column, "Column name")->required();
  fit->add_option("--window", window, "Fit window a,b (default: last 60% of the run)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kConfig;
  }

  try {
    if (*run) return cmd_run(experiment, config, out, resume, plots, ignore_hash, quiet);
    if (*verify) return cmd_verify(seed);
    if (*fit) return cmd_fit(csv, column, window);
  } catch (const slipflow::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const slipflow::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kConfig;
  } catch (const slipflow::NumericalBlowup& e) {
    std::cerr << "numerical blowup: " << e.what() << '\n';
    return kNumerical;
  } catch (const slipflow::StiffnessError& e) {
    std::cerr << "stiffness: " << e.what() << '\n';
    return kNumerical;
  } catch (const slipflow::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
  return kPass;
}

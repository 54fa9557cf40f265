/// @file acceptance.cpp
/// @brief Runs the acceptance experiments and prints one PASS/FAIL line per
/// criterion. Exit status is non-zero when any criterion fails.
///
/// Usage: slipflow_acceptance [--out DIR] [--configs DIR] [--only 1,5,...]
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dense_stokes.hpp"
#include "slipflow/elliptic.hpp"
#include "slipflow/errors.hpp"
#include "slipflow/harness/checkpoint.hpp"
#include "slipflow/harness/config.hpp"
#include "slipflow/harness/experiments.hpp"
#include "slipflow/harness/verify.hpp"
#include "slipflow/reduce.hpp"

namespace fs = std::filesystem;
using namespace slipflow;
using namespace slipflow::harness;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt_num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// Collects assertions and renders a compact detail string.
class Verdict {
 public:
  void add(const Assertion& a) {
    ok_ = ok_ && a.passed;
    if (!detail_.empty()) detail_ += "; ";
    detail_ += a.name + "=" + fmt_num(a.value) + (a.passed ? "" : " (FAIL, threshold " + fmt_num(a.threshold) + ")");
  }
  void add(const std::string& name, bool passed, double value, double threshold) {
    add(Assertion{name, passed, value, threshold, {}});
  }
  // Every assertion of `rep` whose name starts with one of `prefixes`.
  void take(const ExperimentReport& rep, std::initializer_list<std::string_view> prefixes) {
    bool any = false;
    for (const Assertion& a : rep.assertions) {
      for (std::string_view p : prefixes) {
        if (a.name.rfind(p, 0) == 0) {
          add(a);
          any = true;
          break;
        }
      }
    }
    if (!any) add("missing_assertions", false, NAN, NAN);
  }
  Outcome outcome() const { return {ok_, detail_}; }

 private:
  bool ok_ = true;
  std::string detail_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig load(const fs::path& configs, const std::string& name, const fs::path& out) {
  RunConfig cfg = load_config(configs / (name + ".cfg"));
  cfg.output_dir = out / name;
  return cfg;
}

// Bitwise determinism of the CSV and of checkpoint/resume on a short run.
Outcome determinism(const fs::path& out) {
  const fs::path dir = out / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  RunConfig cfg = parse_config(
      "[grid]\nn = 16\n[numerics]\nt_end = 0.2\n[initial]\namplitude = 0.2\n[output]\nsample_every = 10\n");
  cfg.output_dir = dir;
  Verdict v;

  SimulationOptions a, b;
  a.csv = dir / "a.csv";
  b.csv = dir / "b.csv";
  const SimulationResult ra = simulate(cfg, a);
  simulate(cfg, b);
  const bool same_csv = slurp(*a.csv) == slurp(*b.csv) && !slurp(*a.csv).empty();
  v.add("csv_bytes_identical", same_csv, same_csv ? 1 : 0, 1);

  RunConfig half = cfg;
  half.control.t_end = 0.1;
  half.checkpoint_every = 10;
  SimulationOptions h;
  h.csv = dir / "resumed.csv";
  h.checkpoint = dir / "half.ckpt";
  simulate(half, h);
  SimulationOptions r;
  r.csv = dir / "resumed.csv";
  r.resume = dir / "half.ckpt";
  const SimulationResult rr = simulate(cfg, r);
  const bool same_state = rr.final_state == ra.final_state;
  v.add("resume_state_bitwise", same_state, same_state ? 1 : 0, 1);
  const bool same_resumed_csv = slurp(*r.csv) == slurp(*a.csv);
  v.add("resume_csv_identical", same_resumed_csv, same_resumed_csv ? 1 : 0, 1);
  return v.outcome();
}

// Dense saddle-point oracle for the Bogovskii pairing on an 8^3 grid.
Assertion dense_pairing_check() {
  const GridSpec g = build_grid({1, 1, 1}, {8, 8, 8}, 2);
  PresetParams p;
  p.amplitude = 0.1;
  const FlowState s = make_initial_state(p, g, EosParams{}).state;
  ScalarField f(g);
  const double mean = interior_mean(s.rho);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { f[q] = s.rho[q] - mean; });
  fill_scalar_ghosts(f);
  const double dense = inner(s.mom, testing::dense_stokes_field(f));
  const double diff = std::abs(bogovskii_pairing(s) - dense);
  return {"dense_oracle_pairing", diff <= 1e-6, diff, 1e-6, {}};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance_out";
  fs::path configs = SLIPFLOW_CONFIG_DIR;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--out" && i + 1 < argc) {
      out = argv[++i];
    } else if (arg == "--configs" && i + 1 < argc) {
      configs = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: " << argv[0] << " [--out DIR] [--configs DIR] [--only 1,2,...]\n";
      return 2;
    }
  }
  fs::create_directories(out);
  const auto wanted = [&](std::initializer_list<int> cs) {
    if (only.empty()) return true;
    for (int c : cs) {
      if (only.count(c)) return true;
    }
    return false;
  };

  std::map<int, Outcome> results;
  std::map<std::string, ExperimentReport> reports;
  const auto stage = [&](const std::string& what, const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::cerr << "[acceptance] " << what << " ..." << std::endl;
    body();
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "[acceptance] " << what << " done in " << fmt_num(s) << " s" << std::endl;
  };
  const auto experiment = [&](Experiment e) -> const ExperimentReport* {
    const std::string name(experiment_name(e));
    if (auto it = reports.find(name); it != reports.end()) return &it->second;
    const ExperimentReport* rep = nullptr;
    try {
      stage(name, [&] {
        RunOptions ro;
        ro.plots = true;
        ro.log = &std::cerr;
        reports[name] = run_experiment(e, load(configs, name, out), ro);
        rep = &reports[name];
      });
    } catch (const std::exception& ex) {
      std::cerr << "[acceptance] " << name << " raised: " << ex.what() << std::endl;
    }
    return rep;
  };
  const auto failed_run = [](const std::string& name) {
    return Outcome{false, name + " did not complete (see log)"};
  };

  // Cheapest first.
  if (wanted({8})) {
    stage("operator verification", [&] {
      Verdict v;
      for (const Assertion& a : verify_suite(20240607)) {
        if (a.name.rfind("order_", 0) == 0 || a.name.rfind("linear_exact", 0) == 0 ||
            a.name == "summation_by_parts" || a.name == "identity_vs_7point") {
          v.add(a);
        }
      }
      results[8] = v.outcome();
    });
  }
  if (wanted({6, 7})) {
    if (const ExperimentReport* p = experiment(Experiment::probes)) {
      Verdict v6, v7;
      v6.take(*p, {"bogovskii_"});
      v6.add(dense_pairing_check());
      v7.take(*p, {"poincare_", "divcurl_"});
      results[6] = v6.outcome();
      results[7] = v7.outcome();
    } else {
      results[6] = results[7] = failed_run("probes");
    }
  }
  if (wanted({10})) {
    stage("determinism and resume", [&] {
      try {
        results[10] = determinism(out);
      } catch (const std::exception& ex) {
        results[10] = {false, ex.what()};
      }
    });
  }
  const ExperimentReport* conv = wanted({2, 9}) ? experiment(Experiment::convergence) : nullptr;
  if (wanted({4})) {
    const ExperimentReport* r = experiment(Experiment::theorem1_positive);
    if (r) {
      Verdict v;
      v.take(*r, {"rate_positive_rho_linf", "r2_rho_linf", "fit_rho_linf", "c0_emp_positive", "log_density_lower_bound"});
      results[4] = v.outcome();
    } else {
      results[4] = failed_run("theorem1-positive");
    }
  }
  if (wanted({5})) {
    const ExperimentReport* r = experiment(Experiment::theorem2_vacuum);
    if (r) {
      Verdict v;
      v.take(*r, {"vacuum_persisted", "grad_rho_l4_no_decay"});
      results[5] = v.outcome();
    } else {
      results[5] = failed_run("theorem2-vacuum");
    }
  }
  const ExperimentReport* t1 = wanted({1, 2, 3, 9}) ? experiment(Experiment::theorem1) : nullptr;

  if (wanted({1})) {
    if (t1) {
      Verdict v;
      v.take(*t1, {"mass_conservation"});
      const double steps = t1->metric("steps");
      v.add("steps", steps >= 10000, steps, 10000);
      const double wall = t1->metric("wall_seconds");
      v.add("wall_seconds", wall <= 1800, wall, 1800);
      results[1] = v.outcome();
    } else {
      results[1] = failed_run("theorem1");
    }
  }
  if (wanted({2})) {
    if (t1 && conv) {
      Verdict v;
      v.take(*t1, {"energy_nonincreasing", "energy_balance"});
      v.take(*conv, {"energy_balance_"});
      results[2] = v.outcome();
    } else {
      results[2] = failed_run(t1 ? "convergence" : "theorem1");
    }
  }
  if (wanted({3})) {
    if (t1) {
      Verdict v;
      v.take(*t1, {"rate_positive_", "r2_", "fit_", "field_rates_agree", "remeasure_"});
      results[3] = v.outcome();
    } else {
      results[3] = failed_run("theorem1");
    }
  }
  if (wanted({9})) {
    if (t1 && conv) {
      Verdict v;
      v.take(*conv, {"momentum_residual_"});
      v.take(*t1, {"momentum_residual"});
      results[9] = v.outcome();
    } else {
      results[9] = failed_run(t1 ? "convergence" : "theorem1");
    }
  }

  static const char* titles[] = {"",
                                 "mass conservation",
                                 "energy identity",
                                 "L2 decay rates",
                                 "L-infinity decay and lower bound",
                                 "vacuum persistence",
                                 "Bogovskii operator",
                                 "inequality probes",
                                 "operator correctness",
                                 "momentum-form residual",
                                 "determinism and resume"};
  bool all = true;
  for (int c = 1; c <= 10; ++c) {
    auto it = results.find(c);
    if (it == results.end()) {
      std::cout << "criterion " << c << " (" << titles[c] << "): SKIP\n";
      continue;
    }
    all = all && it->second.passed;
    std::cout << "criterion " << c << " (" << titles[c] << "): " << (it->second.passed ? "PASS" : "FAIL")
              << "  [" << it->second.detail << "]\n";
  }
  std::cout << std::flush;
  return all ? 0 : 1;
}

/// @file experiments.cpp
/// @brief Simulation driver, experiment drivers and JSON run summaries.
#include "slipflow/harness/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>

#include <fmt/format.h>
#include <json.hpp>

#include "slipflow/elliptic.hpp"
#include "slipflow/errors.hpp"
#include "slipflow/harness/checkpoint.hpp"
#include "slipflow/harness/plot.hpp"
#include "slipflow/operators.hpp"
#include "slipflow/reduce.hpp"

namespace slipflow::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

fs::path partial_path(const fs::path& csv) {
  fs::path p = csv;
  p += ".partial";
  return p;
}

// Rows of an interrupted CSV up to and including `last_step`. Reading stops at
// the first malformed row, which can only be a torn final write.
std::vector<DiagnosticsRecord> restore_rows(const fs::path& csv, std::int64_t last_step) {
  std::vector<DiagnosticsRecord> rows;
  fs::path src = partial_path(csv);
  if (!fs::exists(src)) src = csv;
  if (!fs::exists(src)) return rows;
  std::ifstream in(src);
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) {
    throw CheckpointError("cannot resume: " + src.string() + " is not a diagnostics CSV");
  }
  while (std::getline(in, line)) {
    DiagnosticsRecord r;
    try {
      r = parse_csv_row(line);
    } catch (const DomainError&) {
      break;
    }
    if (r.step > last_step) break;
    rows.push_back(r);
  }
  return rows;
}

std::vector<double> column(const std::vector<DiagnosticsRecord>& recs,
                           double (*get)(const DiagnosticsRecord&)) {
  std::vector<double> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back(get(r));
  return out;
}

struct Quantity {
  const char* name;
  double (*get)(const DiagnosticsRecord&);
};

constexpr Quantity kDecayQuantities[] = {
    {"rho_l2", [](const DiagnosticsRecord& r) { return r.rho_l2; }},
    {"sqrt_rho_u_l2", [](const DiagnosticsRecord& r) { return r.sqrt_rho_u_l2; }},
    {"grad_u_l2", [](const DiagnosticsRecord& r) { return r.grad_u_l2; }},
    {"sqrt_rho_udot_l2", [](const DiagnosticsRecord& r) { return r.sqrt_rho_udot_l2; }},
};

struct FitOutcome {
  std::optional<DecayFit> fit;
  std::string error;
};

// Fits over `window`, or the default window of the series when it is absent.
FitOutcome fit_column(const std::vector<DiagnosticsRecord>& recs, double (*get)(const DiagnosticsRecord&),
                      double r2_threshold, std::optional<std::pair<double, double>> window = std::nullopt) {
  FitOutcome out;
  try {
    const auto t = column(recs, [](const DiagnosticsRecord& r) { return r.t; });
    if (t.size() < 2) throw DomainError("fewer than two samples");
    const auto [t0, t1] = window ? *window : default_fit_window(t);
    out.fit = fit_decay(t, column(recs, get), t0, t1, r2_threshold);
  } catch (const DomainError& e) {
    out.error = e.what();
  }
  return out;
}

json fit_json(const FitOutcome& f) {
  if (!f.fit) return {{"error", f.error}};
  const DecayFit& d = *f.fit;
  return {{"eta", d.eta},         {"C", d.C},           {"r2", d.r2},
          {"t0", d.t0},           {"t1", d.t1},         {"samples", d.samples},
          {"excluded", d.excluded}, {"constant", d.constant}, {"accepted", d.accepted}};
}

class ReportBuilder {
 public:
  ReportBuilder(Experiment e, const RunConfig& cfg) : cfg_(cfg) {
    rep_.experiment = std::string(experiment_name(e));
    extra_["experiment"] = rep_.experiment;
  }

  void check(const std::string& name, bool ok, double value, double threshold,
             std::string detail = {}) {
    rep_.assertions.push_back({name, ok, value, threshold, std::move(detail)});
  }
  void metric(const std::string& name, double v) { rep_.metrics[name] = v; }
  json& extra() { return extra_; }
  ExperimentReport& report() { return rep_; }

  ExperimentReport finish(const fs::path& dir) {
    json j = extra_;
    j["passed"] = rep_.passed();
    j["failures"] = json::array();
    j["assertions"] = json::array();
    for (const auto& a : rep_.assertions) {
      json ja = {{"name", a.name}, {"passed", a.passed}, {"value", a.value},
                 {"threshold", a.threshold}};
      if (!a.detail.empty()) ja["detail"] = a.detail;
      j["assertions"].push_back(ja);
      if (!a.passed) {
        j["failures"].push_back(a.detail.empty() ? a.name : a.name + ": " + a.detail);
      }
    }
    j["metrics"] = rep_.metrics;
    j["config"] = config_echo(cfg_);
    rep_.summary_json = j.dump(2);
    rep_.summary_path = dir / (rep_.experiment + ".json");
    write_atomic(rep_.summary_path, rep_.summary_json + "\n");
    return std::move(rep_);
  }

 private:
  const RunConfig& cfg_;
  ExperimentReport rep_;
  json extra_;
};

std::string fmt_value(double v) { return fmt::format("{:.6g}", v); }

// Cadence giving roughly `samples` records over [0, t_end] for this config.
std::int64_t cadence_for(const RunConfig& cfg, int samples) {
  const GridSpec g = cfg.grid();
  const InitialState init = make_initial_state(cfg.initial, g, cfg.eos);
  const double dt = cfl_dt(init.state, cfg.eos, cfg.control, cfg.absolute_floor());
  const double steps = std::ceil(cfg.control.t_end / dt);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(steps / samples)));
}

RunConfig with_cells(RunConfig cfg, int n) {
  cfg.cells.fill(n);
  return cfg;
}

bool wants_plots(const RunConfig& cfg, const RunOptions& opts) {
  return opts.plots.value_or(cfg.plots);
}

std::vector<PlotSeries> decay_series(const std::vector<DiagnosticsRecord>& recs,
                                     const std::vector<std::pair<Quantity, FitOutcome>>& items) {
  std::vector<PlotSeries> out;
  const auto t = column(recs, [](const DiagnosticsRecord& r) { return r.t; });
  for (const auto& [q, f] : items) out.push_back({q.name, t, column(recs, q.get), f.fit});
  return out;
}

// 2x2x2 cell averages of a field on a grid twice as fine as `coarse`.
ScalarField restrict_to(const ScalarField& fine, const GridSpec& coarse) {
  ScalarField out(coarse);
  for_each_index(coarse, cell_box(coarse), [&](int i, int j, int k, std::size_t q) {
    double s = 0.0;
    for (int c = 0; c < 8; ++c) s += fine.at(2 * i + (c & 1), 2 * j + ((c >> 1) & 1), 2 * k + (c >> 2));
    out[q] = s / 8.0;
  });
  return out;
}

double l2_difference(const ScalarField& a, const ScalarField& b) {
  const GridSpec& g = a.grid();
  CompensatedSum s;
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) {
    const double d = a[q] - b[q];
    s.add(d * d);
  });
  return std::sqrt(s.value() * g.cell_volume());
}

// ---------------------------------------------------------------------------

ExperimentReport run_theorem1(const RunConfig& base, const RunOptions& opts) {
  RunConfig cfg = base;
  if (cfg.initial.preset != Preset::smooth_perturbation &&
      cfg.initial.preset != Preset::large_amplitude) {
    cfg.initial.preset = Preset::smooth_perturbation;
  }
  const fs::path dir = cfg.output_dir;
  ReportBuilder rb(Experiment::theorem1, cfg);
  const auto& an = cfg.analysis;

  SimulationOptions so;
  so.csv = dir / "theorem1.csv";
  if (cfg.checkpoint_every > 0) so.checkpoint = dir / "theorem1.ckpt";
  so.resume = opts.resume;
  so.ignore_config_hash = opts.ignore_config_hash;
  so.log = opts.log;
  SimulationResult sim = simulate(cfg, so);
  const auto& recs = sim.records;
  rb.report().csv_path = *so.csv;
  rb.metric("steps", static_cast<double>(recs.empty() ? 0 : recs.back().step));
  rb.metric("wall_seconds", sim.wall_seconds);
  rb.extra()["preset"] = std::string(preset_name(cfg.initial.preset));

  // Decay fits.
  std::vector<std::pair<Quantity, FitOutcome>> fits;
  json jf;
  for (const Quantity& q : kDecayQuantities) {
    FitOutcome f = fit_column(recs, q.get, an.fit_r2);
    jf[q.name] = fit_json(f);
    const std::string n = q.name;
    if (f.fit) {
      rb.metric("rate_" + n, f.fit->eta);
      rb.metric("r2_" + n, f.fit->r2);
      rb.check("rate_positive_" + n, f.fit->eta > 0.0, f.fit->eta, 0.0);
      rb.check("r2_" + n, f.fit->r2 >= an.fit_r2, f.fit->r2, an.fit_r2);
    } else {
      rb.check("fit_" + n, false, NAN, NAN, f.error);
    }
    fits.emplace_back(q, std::move(f));
  }
  rb.extra()["fits"] = jf;

  // The three field rates must agree pairwise within the configured factor.
  {
    double lo = INFINITY, hi = 0.0;
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      if (!fits[i].second.fit || !(fits[i].second.fit->eta > 0.0)) {
        ok = false;
        continue;
      }
      lo = std::min(lo, fits[i].second.fit->eta);
      hi = std::max(hi, fits[i].second.fit->eta);
    }
    const double ratio = ok ? hi / lo : NAN;
    rb.metric("field_rate_ratio", ratio);
    rb.check("field_rates_agree", ok && ratio <= an.rate_agreement, ratio, an.rate_agreement);
  }

  // Conservation and energy.
  double mass_drift = 0.0, max_increase = -INFINITY, max_balance = 0.0, max_momres = 0.0,
         max_pres = 0.0;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    mass_drift = std::max(mass_drift, std::abs(recs[k].rho_mean - sim.rho_mean0) / sim.rho_mean0);
    max_momres = std::max(max_momres, recs[k].momentum_residual);
    max_pres = std::max(max_pres, recs[k].pressure_residual);
    if (k > 0) {
      max_increase = std::max(max_increase, recs[k].energy - recs[k - 1].energy);
      max_balance = std::max(max_balance, std::abs(recs[k].energy_balance_residual));
    }
  }
  rb.metric("mass_drift", mass_drift);
  rb.metric("energy_max_increase", max_increase);
  rb.metric("energy_balance_max", max_balance);
  rb.metric("momentum_residual_max", max_momres);
  rb.metric("pressure_residual_max", max_pres);
  rb.check("mass_conservation", mass_drift <= an.mass_tol, mass_drift, an.mass_tol);
  rb.check("energy_nonincreasing", recs.size() > 1 && max_increase <= 0.0, max_increase, 0.0);
  rb.check("energy_balance", max_balance <= an.energy_balance_tol, max_balance,
           an.energy_balance_tol);
  rb.check("momentum_residual", max_momres <= an.momentum_residual_tol, max_momres,
           an.momentum_residual_tol);

  const LyapunovReport ly = lyapunov_monotonicity(recs, cfg.weights, cfg.eos.mu);
  json jl;
  for (const FunctionalCheck* fc : {&ly.m1, &ly.m2, &ly.m3}) {
    jl[fc->name] = {{"intervals", fc->intervals},       {"holds", fc->holds},
                    {"fraction", fc->fraction},         {"decreasing", fc->decreasing},
                    {"positive_from", fc->positive_from}, {"positive_definite", fc->positive_definite}};
    rb.metric(fc->name + "_inequality_fraction", fc->fraction);
  }
  jl["M1_equivalence"] = {ly.m1_lower, ly.m1_upper};
  rb.extra()["lyapunov"] = jl;

  const DensityBounds db = track_density_bounds(recs, sim.rho_min0);
  rb.extra()["density"] = {{"inf_min", db.inf_min},
                           {"sup_max", db.sup_max},
                           {"div_linf_integral", db.final_div_linf_integral}};

  // Optional second resolution for the rates.
  if (an.remeasure_cells > 0) {
    RunConfig c2 = with_cells(cfg, an.remeasure_cells);
    c2.control.t_end = an.remeasure_t_end;
    c2.checkpoint_every = 0;
    const double scale = std::pow(static_cast<double>(an.remeasure_cells) / cfg.cells[0], 2);
    c2.sample_every = std::max<std::int64_t>(1, std::llround(cfg.sample_every * scale));
    SimulationOptions so2;
    so2.csv = dir / "theorem1.remeasure.csv";
    so2.log = opts.log;
    const SimulationResult sim2 = simulate(c2, so2);
    json jr;
    // Both resolutions are fit over the shorter run's window, so the
    // comparison isolates the grid and not the time window.
    std::optional<std::pair<double, double>> window;
    if (sim2.records.size() >= 2) {
      window = default_fit_window(column(sim2.records, [](const DiagnosticsRecord& r) { return r.t; }));
    }
    for (const auto& [q, base] : fits) {
      const FitOutcome f2 = fit_column(sim2.records, q.get, an.fit_r2, window);
      const FitOutcome f1 = window ? fit_column(recs, q.get, an.fit_r2, window) : base;
      jr[q.name] = {{"fine", fit_json(f2)}, {"base", fit_json(f1)}};
      const std::string n = q.name;
      if (!f1.fit || !f2.fit) {
        rb.check("remeasure_" + n, false, NAN, an.remeasure_tol,
                 f2.fit ? "no base-resolution fit" : f2.error);
        continue;
      }
      const double rel = std::abs(f2.fit->eta / f1.fit->eta - 1.0);
      rb.metric("remeasure_rate_" + n, f2.fit->eta);
      rb.metric("remeasure_rel_" + n, rel);
      rb.check("remeasure_" + n, rel <= an.remeasure_tol, rel, an.remeasure_tol,
               fmt::format("N={} rate {} vs N={} rate {}", an.remeasure_cells,
                           fmt_value(f2.fit->eta), cfg.cells[0], fmt_value(f1.fit->eta)));
    }
    rb.extra()["remeasure"] = {{"cells", an.remeasure_cells},
                               {"t_end", an.remeasure_t_end},
                               {"fits", jr}};
  }

  if (wants_plots(cfg, opts) && !recs.empty()) {
    const fs::path svg = dir / "theorem1.svg";
    emit_plot(decay_series(recs, fits), svg, {"Decay of the perturbation", "t", "L2 norm"});
    rb.report().plots.push_back(svg);
  }
  rb.report().records = recs;
  return rb.finish(dir);
}

ExperimentReport run_theorem1_positive(const RunConfig& base, const RunOptions& opts) {
  RunConfig cfg = base;
  cfg.initial.preset = Preset::positive_floor;
  const fs::path dir = cfg.output_dir;
  ReportBuilder rb(Experiment::theorem1_positive, cfg);
  const auto& an = cfg.analysis;

  SimulationOptions so;
  so.csv = dir / "theorem1-positive.csv";
  if (cfg.checkpoint_every > 0) so.checkpoint = dir / "theorem1-positive.ckpt";
  so.resume = opts.resume;
  so.ignore_config_hash = opts.ignore_config_hash;
  so.log = opts.log;
  const SimulationResult sim = simulate(cfg, so);
  const auto& recs = sim.records;
  rb.report().csv_path = *so.csv;
  rb.metric("wall_seconds", sim.wall_seconds);

  const Quantity linf{"rho_linf", [](const DiagnosticsRecord& r) { return r.rho_linf; }};
  const FitOutcome f = fit_column(recs, linf.get, an.linf_fit_r2);
  rb.extra()["fits"] = {{"rho_linf", fit_json(f)}};
  if (f.fit) {
    rb.metric("rate_rho_linf", f.fit->eta);
    rb.metric("r2_rho_linf", f.fit->r2);
    rb.check("rate_positive_rho_linf", f.fit->eta > 0.0, f.fit->eta, 0.0);
    rb.check("r2_rho_linf", f.fit->r2 >= an.linf_fit_r2, f.fit->r2, an.linf_fit_r2);
  } else {
    rb.check("fit_rho_linf", false, NAN, NAN, f.error);
  }

  const DensityBounds db = track_density_bounds(recs, sim.rho_min0);
  rb.metric("rho_star", cfg.initial.rho_star);
  rb.metric("rho_min0", sim.rho_min0);
  rb.metric("c0_emp", db.inf_min);
  rb.metric("sup_max", db.sup_max);
  rb.metric("div_linf_integral", db.final_div_linf_integral);
  rb.metric("lower_bound_ratio", db.lower_bound_ratio);
  rb.check("c0_emp_positive", db.inf_min > 0.0, db.inf_min, 0.0);
  rb.check("log_density_lower_bound", db.lower_bound_ratio >= 1.0 - an.lower_bound_slack,
           db.lower_bound_ratio, 1.0 - an.lower_bound_slack,
           "min over samples of min rho / (rho_min0 exp(-int ||div u||_inf))");
  rb.extra()["density"] = {{"c0_emp", db.inf_min},
                           {"rho_min0", sim.rho_min0},
                           {"sup_max", db.sup_max},
                           {"lower_bound_ratio", db.lower_bound_ratio},
                           {"div_linf_integral", db.final_div_linf_integral}};

  if (wants_plots(cfg, opts) && !recs.empty()) {
    const fs::path svg = dir / "theorem1-positive.svg";
    const auto t = column(recs, [](const DiagnosticsRecord& r) { return r.t; });
    std::vector<PlotSeries> s{
        {"rho_linf", t, column(recs, linf.get), f.fit},
        {"rho_l2", t, column(recs, kDecayQuantities[0].get), std::nullopt},
        {"rho_min", t, column(recs, [](const DiagnosticsRecord& r) { return r.rho_min; }),
         std::nullopt}};
    emit_plot(s, svg, {"Positive initial density", "t", "value"});
    rb.report().plots.push_back(svg);
  }
  rb.report().records = recs;
  return rb.finish(dir);
}

ExperimentReport run_theorem2_vacuum(const RunConfig& base, const RunOptions& opts) {
  RunConfig cfg = base;
  cfg.initial.preset = Preset::vacuum_point;
  const fs::path dir = cfg.output_dir;
  ReportBuilder rb(Experiment::theorem2_vacuum, cfg);
  const auto& an = cfg.analysis;

  SimulationOptions so;
  so.csv = dir / "theorem2-vacuum.csv";
  if (cfg.checkpoint_every > 0) so.checkpoint = dir / "theorem2-vacuum.ckpt";
  so.resume = opts.resume;
  so.ignore_config_hash = opts.ignore_config_hash;
  so.log = opts.log;
  const SimulationResult sim = simulate(cfg, so);
  const auto& recs = sim.records;
  rb.report().csv_path = *so.csv;
  rb.metric("wall_seconds", sim.wall_seconds);

  const DensityBounds db = track_density_bounds(recs, sim.rho_min0);
  const bool persisted = !recs.empty() && db.max_of_min <= an.vacuum_tol;
  rb.metric("max_of_min_rho", db.max_of_min);
  rb.metric("sup_max", db.sup_max);
  rb.check("vacuum_persisted", persisted, db.max_of_min, an.vacuum_tol,
           "max over samples of min rho");
  rb.extra()["vacuum_persisted"] = persisted;

  double late_min = INFINITY;
  const double g0 = recs.empty() ? NAN : recs.front().grad_rho_l4;
  if (!recs.empty()) {
    const double t_half = recs.front().t + 0.5 * (recs.back().t - recs.front().t);
    for (const auto& r : recs) {
      if (r.t >= t_half) late_min = std::min(late_min, r.grad_rho_l4);
    }
  }
  const double ratio = late_min / g0;
  rb.metric("grad_rho_l4_initial", g0);
  rb.metric("grad_rho_l4_late_min", late_min);
  rb.metric("grad_rho_l4_ratio", ratio);
  rb.check("grad_rho_l4_no_decay", ratio >= an.grad_rho_ratio, ratio, an.grad_rho_ratio,
           "late-half minimum over the initial value");

  std::int64_t masked = 0;
  for (const auto& r : recs) masked += (r.flags & kFlagUdotMasked) ? 1 : 0;
  rb.metric("records_with_masked_udot", static_cast<double>(masked));
  rb.metric("absolute_vacuum_floor", cfg.absolute_floor());

  if (wants_plots(cfg, opts) && !recs.empty()) {
    const fs::path svg = dir / "theorem2-vacuum.svg";
    const auto t = column(recs, [](const DiagnosticsRecord& r) { return r.t; });
    std::vector<PlotSeries> s{
        {"min rho", t, column(recs, [](const DiagnosticsRecord& r) { return r.rho_min; }),
         std::nullopt},
        {"|grad rho|_4", t, column(recs, [](const DiagnosticsRecord& r) { return r.grad_rho_l4; }),
         std::nullopt},
        {"rho_l2", t, column(recs, kDecayQuantities[0].get), std::nullopt}};
    emit_plot(s, svg, {"Initial vacuum", "t", "value"});
    rb.report().plots.push_back(svg);
  }
  rb.report().records = recs;
  return rb.finish(dir);
}

ExperimentReport run_convergence(const RunConfig& base, const RunOptions& opts) {
  RunConfig cfg = base;
  if (cfg.initial.preset != Preset::smooth_perturbation &&
      cfg.initial.preset != Preset::large_amplitude) {
    cfg.initial.preset = Preset::smooth_perturbation;
  }
  cfg.control.t_end = cfg.analysis.convergence_t_end;
  cfg.checkpoint_every = 0;
  const fs::path dir = cfg.output_dir;
  ReportBuilder rb(Experiment::convergence, cfg);
  const auto& an = cfg.analysis;

  struct Row {
    int n;
    double balance, momres, pres, energy, rho_l2;
    ScalarField rho;
  };
  std::vector<Row> rows;
  json table = json::array();
  double wall = 0.0;
  for (int n : an.convergence_cells) {
    RunConfig cn = with_cells(cfg, n);
    cn.sample_every = cadence_for(cn, 10);
    SimulationOptions so;
    so.csv = dir / fmt::format("convergence.N{}.csv", n);
    so.log = opts.log;
    SimulationResult sim = simulate(cn, so);
    wall += sim.wall_seconds;
    Row row{n, 0.0, 0.0, 0.0, NAN, NAN, std::move(sim.final_state.rho)};
    for (std::size_t k = 1; k < sim.records.size(); ++k) {
      row.balance = std::max(row.balance, std::abs(sim.records[k].energy_balance_residual));
      row.momres = std::max(row.momres, sim.records[k].momentum_residual);
      row.pres = std::max(row.pres, sim.records[k].pressure_residual);
    }
    if (!sim.records.empty()) {
      row.energy = sim.records.back().energy;
      row.rho_l2 = sim.records.back().rho_l2;
    }
    table.push_back({{"cells", n},
                     {"steps", sim.records.empty() ? 0 : sim.records.back().step},
                     {"sample_every", cn.sample_every},
                     {"energy_balance_max", row.balance},
                     {"momentum_residual_max", row.momres},
                     {"pressure_residual_max", row.pres},
                     {"final_energy", row.energy},
                     {"final_rho_l2", row.rho_l2}});
    rb.metric(fmt::format("energy_balance_N{}", n), row.balance);
    rb.metric(fmt::format("momentum_residual_N{}", n), row.momres);
    rb.metric(fmt::format("pressure_residual_N{}", n), row.pres);
    rows.push_back(std::move(row));
  }
  rb.metric("wall_seconds", wall);

  // Density self-convergence from successive factor-2 refinements.
  if (rows.size() == 3 && rows[1].n == 2 * rows[0].n && rows[2].n == 2 * rows[1].n) {
    const double e01 = l2_difference(restrict_to(rows[1].rho, rows[0].rho.grid()), rows[0].rho);
    const double e12 = l2_difference(restrict_to(rows[2].rho, rows[1].rho.grid()), rows[1].rho);
    rb.metric("density_difference_coarse", e01);
    rb.metric("density_difference_fine", e12);
    rb.metric("density_observed_order", observed_order(e01, e12));
  }

  const Row& mid = rows[1];
  const Row& fine = rows[2];
  const double balance_factor = mid.balance / fine.balance;
  const double residual_factor = mid.momres / fine.momres;
  rb.metric("energy_balance_factor", balance_factor);
  rb.metric("momentum_residual_factor", residual_factor);
  rb.check(fmt::format("energy_balance_N{}", mid.n), mid.balance <= an.energy_balance_tol,
           mid.balance, an.energy_balance_tol);
  rb.check(fmt::format("energy_balance_N{}", fine.n), fine.balance <= an.convergence_balance_tol,
           fine.balance, an.convergence_balance_tol);
  rb.check("energy_balance_self_convergence", balance_factor >= an.convergence_balance_factor,
           balance_factor, an.convergence_balance_factor);
  rb.check(fmt::format("momentum_residual_N{}", mid.n), mid.momres <= an.momentum_residual_tol,
           mid.momres, an.momentum_residual_tol);
  rb.check("momentum_residual_self_convergence",
           residual_factor >= an.convergence_residual_factor, residual_factor,
           an.convergence_residual_factor);
  rb.extra()["table"] = table;
  rb.extra()["t_end"] = cfg.control.t_end;

  if (wants_plots(cfg, opts)) {
    std::vector<PlotSeries> s;
    std::vector<double> ns, bal, mom;
    for (const Row& r : rows) {
      ns.push_back(r.n);
      bal.push_back(r.balance);
      mom.push_back(r.momres);
    }
    s.push_back({"energy balance", ns, bal, std::nullopt});
    s.push_back({"momentum residual", ns, mom, std::nullopt});
    const fs::path svg = dir / "convergence.svg";
    emit_plot(s, svg, {"Self-convergence", "cells per axis", "residual"});
    rb.report().plots.push_back(svg);
  }
  return rb.finish(dir);
}

ExperimentReport run_probes(const RunConfig& cfg, const RunOptions& opts) {
  const fs::path dir = cfg.output_dir;
  ReportBuilder rb(Experiment::probes, cfg);
  const auto& an = cfg.analysis;
  const auto t0 = std::chrono::steady_clock::now();

  json jp = json::array();
  std::vector<double> poincare, divcurl, bog;
  for (int n : an.probe_cells) {
    const GridSpec g = with_cells(cfg, n).grid();
    const ProbeReport p = inequality_probe(ProbeKind::poincare, an.probe_trials, g, cfg.seed);
    const ProbeReport d = inequality_probe(ProbeKind::divcurl, an.probe_trials, g, cfg.seed);
    const BogovskiiProbe b = bogovskii_probe(g, an.probe_trials, cfg.seed, cfg.stokes_tol);
    poincare.push_back(p.max_ratio);
    divcurl.push_back(d.max_ratio);
    bog.push_back(b.max_ratio);
    jp.push_back({{"cells", n},
                  {"poincare_max", p.max_ratio},
                  {"poincare_skipped", p.skipped},
                  {"divcurl_max", d.max_ratio},
                  {"divcurl_skipped", d.skipped},
                  {"bogovskii_max_ratio", b.max_ratio},
                  {"bogovskii_max_divergence_residual", b.max_divergence_residual},
                  {"bogovskii_max_wall_value", b.max_wall_value},
                  {"bogovskii_max_iterations", b.max_iterations}});
    rb.metric(fmt::format("poincare_max_N{}", n), p.max_ratio);
    rb.metric(fmt::format("divcurl_max_N{}", n), d.max_ratio);
    rb.metric(fmt::format("bogovskii_ratio_N{}", n), b.max_ratio);
    rb.metric(fmt::format("bogovskii_residual_N{}", n), b.max_divergence_residual);
    rb.check(fmt::format("poincare_finite_N{}", n), std::isfinite(p.max_ratio) && p.max_ratio > 0,
             p.max_ratio, INFINITY);
    rb.check(fmt::format("divcurl_finite_N{}", n), std::isfinite(d.max_ratio) && d.max_ratio > 0,
             d.max_ratio, INFINITY);
    rb.check(fmt::format("bogovskii_divergence_N{}", n), b.max_divergence_residual <= 1e-8,
             b.max_divergence_residual, 1e-8);
    rb.check(fmt::format("bogovskii_walls_N{}", n), b.max_wall_value == 0.0, b.max_wall_value, 0.0);
  }
  const auto drift = [](const std::vector<double>& v) {
    return std::abs(v.back() - v.front()) / v.front();
  };
  rb.metric("poincare_drift", drift(poincare));
  rb.metric("divcurl_drift", drift(divcurl));
  rb.metric("bogovskii_drift", drift(bog));
  rb.check("poincare_drift", drift(poincare) <= an.probe_drift, drift(poincare), an.probe_drift);
  rb.check("divcurl_drift", drift(divcurl) <= an.probe_drift, drift(divcurl), an.probe_drift);
  rb.check("bogovskii_drift", drift(bog) <= an.probe_drift, drift(bog), an.probe_drift);

  // f = (sin pi x, 0, 0) has ||f|| / ||grad f|| = 1/pi exactly in the continuum.
  {
    const int n = *std::max_element(an.probe_cells.begin(), an.probe_cells.end());
    const GridSpec g = with_cells(cfg, n).grid();
    VectorField f(g);
    for_each_index(g, face_box(g, 0), [&](int i, int, int, std::size_t q) {
      f.data(0)[q] = std::sin(std::numbers::pi * g.node(0, i) / g.extent[0]);
    });
    fill_vector_ghosts(f);
    const double ratio = probe_ratio(ProbeKind::poincare, f).value_or(NAN);
    const double rel = std::abs(ratio * std::numbers::pi - 1.0);
    rb.metric("poincare_analytic_ratio", ratio);
    rb.metric("poincare_analytic_rel_error", rel);
    rb.check("poincare_analytic", rel <= 0.01, rel, 0.01,
             fmt::format("ratio {} vs 1/pi at N={}", fmt_value(ratio), n));
  }
  rb.extra()["resolutions"] = jp;
  rb.extra()["trials"] = an.probe_trials;
  rb.extra()["seed"] = cfg.seed;
  rb.metric("wall_seconds", seconds_since(t0));

  if (wants_plots(cfg, opts)) {
    std::vector<double> ns(an.probe_cells.begin(), an.probe_cells.end());
    std::vector<PlotSeries> s{{"Poincare max", ns, poincare, std::nullopt},
                              {"div-curl max", ns, divcurl, std::nullopt},
                              {"Bogovskii max", ns, bog, std::nullopt}};
    const fs::path svg = dir / "probes.svg";
    emit_plot(s, svg, {"Inequality probes", "cells per axis", "ratio"});
    rb.report().plots.push_back(svg);
  }
  return rb.finish(dir);
}

}  // namespace

Experiment parse_experiment(std::string_view name) {
  if (name == "theorem1") return Experiment::theorem1;
  if (name == "theorem1-positive") return Experiment::theorem1_positive;
  if (name == "theorem2-vacuum") return Experiment::theorem2_vacuum;
  if (name == "convergence") return Experiment::convergence;
  if (name == "probes") return Experiment::probes;
  throw ConfigError("experiment", "unknown experiment '" + std::string(name) +
                                      "' (theorem1, theorem1-positive, theorem2-vacuum, "
                                      "convergence, probes)");
}

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::theorem1: return "theorem1";
    case Experiment::theorem1_positive: return "theorem1-positive";
    case Experiment::theorem2_vacuum: return "theorem2-vacuum";
    case Experiment::convergence: return "convergence";
    case Experiment::probes: return "probes";
  }
  return "unknown";
}

bool ExperimentReport::passed() const {
  return !assertions.empty() &&
         std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

std::vector<std::string> ExperimentReport::failures() const {
  std::vector<std::string> out;
  for (const auto& a : assertions) {
    if (!a.passed) out.push_back(a.detail.empty() ? a.name : a.name + ": " + a.detail);
  }
  return out;
}

double ExperimentReport::metric(const std::string& name) const {
  const auto it = metrics.find(name);
  if (it == metrics.end()) throw DomainError("report has no metric '" + name + "'");
  return it->second;
}

SimulationResult simulate(const RunConfig& cfg, const SimulationOptions& opts) {
  validate(cfg);
  const auto t_start = std::chrono::steady_clock::now();
  const GridSpec g = cfg.grid();
  const double floor = cfg.absolute_floor();
  const InitialState init = make_initial_state(cfg.initial, g, cfg.eos);

  SimulationResult res;
  res.rho_min0 = init.rho_min0;
  res.rho_max0 = init.rho_max0;
  res.rho_mean0 = interior_mean(init.state.rho);

  SamplerConfig sc;
  sc.eos = cfg.eos;
  sc.weights = cfg.weights;
  sc.vacuum_floor = floor;
  sc.rho_mean0 = res.rho_mean0;
  sc.stokes_tol = cfg.stokes_tol;
  sc.rho_hat = cfg.analysis.rho_hat;
  Sampler sampler(g, sc);
  Solver solver(g, cfg.eos, floor);
  const std::uint64_t hash = config_hash(cfg);

  IntegrateOptions io;
  io.control = cfg.control;
  io.sample_every = cfg.sample_every;

  FlowState start;
  if (opts.resume) {
    Checkpoint ck = read_checkpoint(*opts.resume);
    if (!(ck.state.grid() == g)) {
      throw CheckpointError("checkpoint grid differs from the configured grid");
    }
    if (!(ck.eos == cfg.eos)) {
      throw CheckpointError("checkpoint physics parameters differ from the configuration");
    }
    if (ck.config_hash != hash && !opts.ignore_config_hash) {
      throw CheckpointError(fmt::format(
          "config hash mismatch (checkpoint {:016x}, config {:016x}); the run settings changed "
          "since the checkpoint was written",
          ck.config_hash, hash));
    }
    start = std::move(ck.state);
    io.initial_integrals = ck.integrals;
    io.sample_initial = false;
    if (ck.sampler_previous) sampler.set_previous(ck.sampler_previous->first, ck.sampler_previous->second);
    if (opts.csv) res.records = restore_rows(*opts.csv, start.step);
  } else {
    start = init.state;
  }

  std::ofstream csv;
  if (opts.csv) {
    if (opts.csv->has_parent_path()) fs::create_directories(opts.csv->parent_path());
    csv.open(partial_path(*opts.csv), std::ios::binary | std::ios::trunc);
    if (!csv) throw Error("cannot open " + partial_path(*opts.csv).string());
    csv << csv_header() << '\n';
    for (const auto& r : res.records) csv << csv_row(r) << '\n';
    csv.flush();
  }

  const double t_end = cfg.control.t_end;
  double next_log = start.t;
  io.on_sample = [&](const SampleContext& ctx) {
    res.records.push_back(sampler.sample(ctx));
    const DiagnosticsRecord& r = res.records.back();
    if (csv.is_open()) {
      csv << csv_row(r) << '\n';
      csv.flush();
    }
    if (opts.log != nullptr && r.t >= next_log) {
      *opts.log << fmt::format("  N={} t={:.4f} step={} E={:.6e} |rho-mean|_2={:.4e} min rho={:.3e}\n",
                               g.cells[0], r.t, r.step, r.energy, r.rho_l2, r.rho_min)
                << std::flush;
      next_log = r.t + 0.1 * t_end;
    }
  };
  if (opts.checkpoint && cfg.checkpoint_every > 0) {
    if (opts.checkpoint->has_parent_path()) fs::create_directories(opts.checkpoint->parent_path());
    io.checkpoint_every = cfg.checkpoint_every;
    io.on_checkpoint = [&](const FlowState& s, const RunningIntegrals& acc) {
      Checkpoint ck;
      ck.state = s;
      ck.eos = cfg.eos;
      ck.config_hash = hash;
      ck.integrals = acc;
      ck.sampler_previous = sampler.previous();
      write_checkpoint(ck, *opts.checkpoint);
    };
  }

  IntegrateResult out = integrate(std::move(start), solver, io);
  if (csv.is_open()) {
    csv.close();
    fs::rename(partial_path(*opts.csv), *opts.csv);
  }
  res.final_state = std::move(out.final_state);
  res.integrals = out.integrals;
  res.steps_taken = out.steps_taken;
  res.wall_seconds = seconds_since(t_start);
  return res;
}

ExperimentReport run_experiment(Experiment e, const RunConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  fs::create_directories(cfg.output_dir);
  write_atomic(cfg.output_dir / (std::string(experiment_name(e)) + ".config.ini"), config_echo(cfg));
  switch (e) {
    case Experiment::theorem1: return run_theorem1(cfg, opts);
    case Experiment::theorem1_positive: return run_theorem1_positive(cfg, opts);
    case Experiment::theorem2_vacuum: return run_theorem2_vacuum(cfg, opts);
    case Experiment::convergence: return run_convergence(cfg, opts);
    case Experiment::probes: return run_probes(cfg, opts);
  }
  throw ConfigError("experiment", "unknown experiment");
}

ScalarField random_mean_zero_field(const GridSpec& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  constexpr int kModes = 4;
  // cos(k pi x / L) tables per axis.
  std::array<std::vector<double>, 3> table;
  for (int a = 0; a < 3; ++a) {
    table[a].resize(static_cast<std::size_t>(kModes) * grid.cells[a]);
    for (int k = 0; k < kModes; ++k) {
      for (int i = 0; i < grid.cells[a]; ++i) {
        table[a][static_cast<std::size_t>(k) * grid.cells[a] + i] =
            std::cos(k * std::numbers::pi * grid.center(a, i) / grid.extent[a]);
      }
    }
  }
  ScalarField f(grid);
  for (int k3 = 0; k3 < kModes; ++k3) {
    for (int k2 = 0; k2 < kModes; ++k2) {
      for (int k1 = 0; k1 < kModes; ++k1) {
        if (k1 == 0 && k2 == 0 && k3 == 0) continue;
        const double c = coef(rng);
        for_each_index(grid, cell_box(grid), [&](int i, int j, int k, std::size_t q) {
          f[q] += c * table[0][static_cast<std::size_t>(k1) * grid.cells[0] + i] *
                  table[1][static_cast<std::size_t>(k2) * grid.cells[1] + j] *
                  table[2][static_cast<std::size_t>(k3) * grid.cells[2] + k];
        });
      }
    }
  }
  const double mean = interior_mean(f);
  for_each_index(grid, cell_box(grid), [&](int, int, int, std::size_t q) { f[q] -= mean; });
  fill_scalar_ghosts(f);
  return f;
}

BogovskiiProbe bogovskii_probe(const GridSpec& grid, int trials, std::uint64_t seed, double tol) {
  if (trials < 1) throw ConfigError("analysis.probe_trials", "at least one trial required");
  StokesOptions so;
  so.tol = tol;
  StokesSolver solver(grid, so);
  BogovskiiProbe out;
  out.cells = grid.cells[0];
  out.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const ScalarField f = random_mean_zero_field(grid, seed + static_cast<std::uint64_t>(t));
    const StokesResult r = solver.solve(f);
    out.max_divergence_residual = std::max(out.max_divergence_residual, r.divergence_residual);
    out.max_iterations = std::max(out.max_iterations, r.stats.iterations);
    out.all_converged = out.all_converged && r.stats.converged;
    for (int a = 0; a < 3; ++a) {
      IndexBox box = face_box(grid, a, true);
      for (const int wall : {0, grid.cells[a]}) {
        IndexBox plane = box;
        plane.lo[a] = wall;
        plane.hi[a] = wall + 1;
        for_each_index(grid, plane, [&](int, int, int, std::size_t q) {
          out.max_wall_value = std::max(out.max_wall_value, std::abs(r.B.data(a)[q]));
        });
      }
    }
    const double fn = lp_norm(f, 2.0);
    if (fn > 0.0) out.max_ratio = std::max(out.max_ratio, dirichlet_gradient_norm(r.B) / fn);
  }
  return out;
}

}  // namespace slipflow::harness

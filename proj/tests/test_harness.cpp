/// @file test_harness.cpp
/// @brief Config parsing, checkpoint files, resume, CSV determinism and plots.
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slipflow/errors.hpp"
#include "slipflow/harness/checkpoint.hpp"
#include "slipflow/harness/config.hpp"
#include "slipflow/harness/experiments.hpp"
#include "slipflow/harness/plot.hpp"
#include "support.hpp"

using namespace slipflow;
using namespace slipflow::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "slipflow_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig small_run(const fs::path& dir) {
  RunConfig cfg = parse_config(
      "[grid]\nn = 8\n[numerics]\nt_end = 0.2\n[initial]\namplitude = 0.2\n[output]\nsample_every = 10\n");
  cfg.output_dir = dir;
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("empty config gives the defaults") {
  const RunConfig c = parse_config("");
  CHECK(c.cells == std::array<int, 3>{32, 32, 32});
  CHECK(c.eos.gamma == 2.0);
  CHECK(c.eos.mu == 1.0);
  CHECK(c.eos.lambda == 0.0);
  CHECK(c.initial.preset == Preset::smooth_perturbation);
  CHECK(c.initial.amplitude == 0.05);
  CHECK(c.control.t_end == 8.0);
}

TEST_CASE("physical parameter violations") {
  CHECK_THROWS_AS(parse_config("lambda = -1\nmu = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lambda = \xE2\x88\x92" "1\nmu = 1\n"), ConfigError);
  try {
    parse_config("[eos]\ngamma = 1.0\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key_path() == "eos.gamma");
  }
}

TEST_CASE("malformed documents") {
  CHECK_THROWS_AS(parse_config("[grid]\nnx = 3x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nosuch]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[initial]\npreset = swirl\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nghost = 1\n"), ConfigError);
}

TEST_CASE("bare keys, unicode minus and comments") {
  const RunConfig c = parse_config("# comment\nmu = 2\n; other\nlambda = \xE2\x88\x92" "0.5\nn = 16\n");
  CHECK(c.eos.mu == 2.0);
  CHECK(c.eos.lambda == -0.5);
  CHECK(c.cells == std::array<int, 3>{16, 16, 16});
}

TEST_CASE("config echo re-parses to the same hash") {
  RunConfig c = parse_config("[eos]\ngamma = 1.4\n[initial]\npreset = positive-floor\nrho_star = 0.3\n");
  const RunConfig back = parse_config(config_echo(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_echo(back) == config_echo(c));
  // Run length and output settings do not change the trajectory hash.
  RunConfig longer = c;
  longer.control.t_end = 100;
  longer.output_dir = "elsewhere";
  CHECK(config_hash(longer) == config_hash(c));
  // The sampling cadence shapes the CSV and the u-dot difference, so it is hashed.
  RunConfig resampled = c;
  resampled.sample_every = 7;
  CHECK(config_hash(resampled) != config_hash(c));
  RunConfig other = c;
  other.eos.mu = 1.5;
  CHECK(config_hash(other) != config_hash(c));
  CHECK(config_keys().size() > 30);
}

TEST_CASE("checkpoint round-trip is bitwise") {
  const fs::path dir = scratch("ckpt");
  EosParams eos;
  PresetParams p;
  p.preset = Preset::uniform;
  Checkpoint c;
  c.state = make_initial_state(p, testing::unit_grid(8), eos).state;
  c.state.t = 0.125;
  c.state.step = 17;
  c.eos = eos;
  c.config_hash = 0xDEADBEEFCAFEF00Dull;
  c.integrals = {0.5, 0.25};
  c.sampler_previous = std::make_pair(1e-3, 2e-3);
  write_checkpoint(c, dir / "eq.ckpt");
  const Checkpoint r = read_checkpoint(dir / "eq.ckpt");
  CHECK(r.state == c.state);
  CHECK(r.eos == c.eos);
  CHECK(r.config_hash == c.config_hash);
  CHECK(r.integrals == c.integrals);
  CHECK(r.sampler_previous == c.sampler_previous);

  // Smooth state too, including non-trivial momentum.
  p.preset = Preset::smooth_perturbation;
  c.state = make_initial_state(p, testing::unit_grid(8), eos).state;
  write_checkpoint(c, dir / "s.ckpt");
  CHECK(read_checkpoint(dir / "s.ckpt").state == c.state);
}

TEST_CASE("damaged checkpoints are rejected") {
  const fs::path dir = scratch("ckpt_bad");
  Checkpoint c;
  PresetParams p;
  c.state = make_initial_state(p, testing::unit_grid(8), EosParams{}).state;
  write_checkpoint(c, dir / "a.ckpt");
  const auto size = fs::file_size(dir / "a.ckpt");

  fs::copy_file(dir / "a.ckpt", dir / "short.ckpt");
  fs::resize_file(dir / "short.ckpt", size - 8);
  try {
    read_checkpoint(dir / "short.ckpt");
    FAIL("expected CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("truncated payload") != std::string::npos);
  }

  std::string bytes = slurp(dir / "a.ckpt");
  bytes[0] = 'X';
  std::ofstream(dir / "magic.ckpt", std::ios::binary) << bytes;
  CHECK_THROWS_AS(read_checkpoint(dir / "magic.ckpt"), CheckpointError);

  std::ofstream(dir / "long.ckpt", std::ios::binary) << slurp(dir / "a.ckpt") << "extra";
  CHECK_THROWS_AS(read_checkpoint(dir / "long.ckpt"), CheckpointError);
  CHECK_THROWS_AS(read_checkpoint(dir / "missing.ckpt"), CheckpointError);
}

TEST_CASE("identical configs give identical CSV bytes") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  SimulationOptions oa, ob;
  oa.csv = a / "run.csv";
  ob.csv = b / "run.csv";
  simulate(small_run(a), oa);
  simulate(small_run(b), ob);
  const std::string ca = slurp(a / "run.csv");
  CHECK(!ca.empty());
  CHECK(ca == slurp(b / "run.csv"));
  CHECK_FALSE(fs::exists(a / "run.csv.partial"));
}

TEST_CASE("resume from a checkpoint equals the uninterrupted run") {
  const fs::path dir = scratch("resume");
  RunConfig cfg = small_run(dir);
  cfg.control.t_end = 0.4;

  SimulationOptions whole;
  whole.csv = dir / "whole.csv";
  const SimulationResult full = simulate(cfg, whole);

  // First half with checkpoints, then resume to the end.
  RunConfig first = cfg;
  first.control.t_end = 0.2;
  first.checkpoint_every = 10;
  SimulationOptions o1;
  o1.csv = dir / "split.csv";
  o1.checkpoint = dir / "split.ckpt";
  const SimulationResult half = simulate(first, o1);
  REQUIRE(fs::exists(dir / "split.ckpt"));
  const Checkpoint ck = read_checkpoint(dir / "split.ckpt");
  CHECK(ck.state.step <= half.final_state.step);

  SimulationOptions o2;
  o2.csv = dir / "split.csv";
  o2.resume = dir / "split.ckpt";
  const SimulationResult rest = simulate(cfg, o2);
  CHECK(rest.final_state == full.final_state);
  CHECK(rest.integrals == full.integrals);
  CHECK(slurp(dir / "split.csv") == slurp(dir / "whole.csv"));

  // A different trajectory-affecting setting refuses the checkpoint.
  RunConfig physics = cfg;
  physics.eos.mu = 2.0;
  CHECK_THROWS_AS(simulate(physics, o2), CheckpointError);
  RunConfig changed = cfg;
  changed.control.cfl_advective = 0.35;
  CHECK_THROWS_AS(simulate(changed, o2), CheckpointError);
  SimulationOptions forced = o2;
  forced.ignore_config_hash = true;
  forced.csv = dir / "forced.csv";
  CHECK_NOTHROW(simulate(changed, forced));
  // Analysis thresholds are outside the hash.
  RunConfig relaxed = cfg;
  relaxed.analysis.fit_r2 = 0.5;
  SimulationOptions o3 = o2;
  o3.csv = dir / "relaxed.csv";
  CHECK_NOTHROW(simulate(relaxed, o3));
}

TEST_CASE("experiment names") {
  for (auto e : {Experiment::theorem1, Experiment::theorem1_positive, Experiment::theorem2_vacuum,
                 Experiment::convergence, Experiment::probes}) {
    CHECK(parse_experiment(experiment_name(e)) == e);
  }
  CHECK_THROWS_AS(parse_experiment("theorem3"), ConfigError);
}

TEST_CASE("probes experiment writes its report") {
  const fs::path dir = scratch("probes");
  RunConfig cfg = parse_config("[analysis]\nprobe_cells = 8,12\nprobe_trials = 10\n");
  cfg.output_dir = dir;
  RunOptions ro;
  ro.plots = true;
  const ExperimentReport r = run_experiment(Experiment::probes, cfg, ro);
  CHECK(fs::exists(dir / "probes.json"));
  CHECK(fs::exists(dir / "probes.config.ini"));
  CHECK(r.summary_json.find("\"passed\"") != std::string::npos);
  CHECK(r.metric("poincare_max_N8") > 0.0);
  CHECK_THROWS(r.metric("nonexistent"));
  for (const auto& p : r.plots) CHECK(fs::exists(p));
}

TEST_CASE("SVG with a two-point series") {
  PlotSummary s;
  const std::string svg = render_svg({{"a", {0, 1}, {1, 0.5}, std::nullopt}}, {}, &s);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(s.polylines == 1);
  std::size_t count = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++count;
  CHECK(count == 1);
}

TEST_CASE("zero values are dropped with a footnote") {
  PlotSummary s;
  const std::string svg = render_svg({{"a", {0, 1, 2}, {1, 0, 0.25}, std::nullopt}}, {}, &s);
  CHECK(s.dropped_points == 1);
  CHECK(svg.find("1 non-positive point omitted") != std::string::npos);
  CHECK_THROWS_AS(render_svg({{"z", {0, 1}, {0, 0}, std::nullopt}}, {}), DomainError);
  CHECK_THROWS_AS(render_svg({{"m", {0, 1}, {1}, std::nullopt}}, {}), DomainError);
  CHECK_THROWS_AS(render_svg({}, {}), DomainError);
}

TEST_CASE("fit annotations") {
  std::vector<PlotSeries> series;
  for (int k = 0; k < 4; ++k) {
    PlotSeries s{"q" + std::to_string(k), {}, {}, std::nullopt};
    for (int i = 0; i < 20; ++i) {
      s.x.push_back(0.1 * i);
      s.y.push_back(std::exp(-(k + 1) * 0.1 * i));
    }
    s.fit = fit_decay(s.x, s.y, 0.0, 1.9);
    series.push_back(s);
  }
  PlotSummary sum;
  const std::string svg = render_svg(series, {"t", "t", "norm"}, &sum);
  CHECK(sum.polylines == 4);
  CHECK(sum.annotations == 4);
  CHECK(svg.find("class=\"rate\"") != std::string::npos);
}

}  // TEST_SUITE

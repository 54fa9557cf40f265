/// @file bench_main.cpp
/// @brief Microbenchmarks for the hot paths: one RHS evaluation, one SSP-RK3
/// step and one Stokes solve for B[f], each at a few resolutions.
#include <benchmark/benchmark.h>

#include <cstdint>

#include "slipflow/elliptic.hpp"
#include "slipflow/reduce.hpp"
#include "slipflow/solver.hpp"

using namespace slipflow;

namespace {

FlowState smooth_state(const GridSpec& g) {
  PresetParams p;
  p.amplitude = 0.05;
  return make_initial_state(p, g, EosParams{}).state;
}

GridSpec cube(int n) { return build_grid({1, 1, 1}, {n, n, n}, 2); }

void BM_Rhs(benchmark::State& st) {
  const GridSpec g = cube(static_cast<int>(st.range(0)));
  const FlowState s = smooth_state(g);
  Solver solver(g, EosParams{}, 1e-10);
  for (auto _ : st) benchmark::DoNotOptimize(&solver.evaluate(s));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(g.interior_cells()));
}

void BM_Step(benchmark::State& st) {
  const GridSpec g = cube(static_cast<int>(st.range(0)));
  FlowState s = smooth_state(g);
  Solver solver(g, EosParams{}, 1e-10);
  const StepControl ctl;
  for (auto _ : st) {
    const RhsEval& k1 = solver.evaluate(s);
    s = solver.advance(s, solver.stable_dt(s, ctl), k1);
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(g.interior_cells()));
}

void BM_Stokes(benchmark::State& st) {
  const GridSpec g = cube(static_cast<int>(st.range(0)));
  const FlowState s = smooth_state(g);
  ScalarField f(g);
  const double mean = interior_mean(s.rho);
  for_each_index(g, cell_box(g), [&](int, int, int, std::size_t q) { f[q] = s.rho[q] - mean; });
  fill_scalar_ghosts(f);
  StokesSolver solver(g);
  int iters = 0;
  for (auto _ : st) {
    const StokesResult r = solver.solve(f);
    iters = r.stats.iterations;
    benchmark::DoNotOptimize(r.B.data(0));
  }
  st.counters["outer_iterations"] = iters;
}

}  // namespace

BENCHMARK(BM_Rhs)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Step)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Stokes)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

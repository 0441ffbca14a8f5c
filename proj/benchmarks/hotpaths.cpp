// microbenchmarks for the expensive paths: moment extraction, steady states,
// witness assembly, the brute-force splitter, and a whole-scenario run

#include <benchmark/benchmark.h>

#include <complex>
#include <string>
#include <vector>

#include "qemit/dynamics.hpp"
#include "qemit/opalg.hpp"
#include "qemit/oracle.hpp"
#include "qemit/qcore.hpp"
#include "qemit/runner.hpp"
#include "qemit/scenario.hpp"
#include "qemit/witness.hpp"

using namespace qemit;
using qcore::Complex;

namespace {

qcore::EmitterModel atom_model(int atoms) {
  qcore::TwoLevelEnsemble m;
  m.atoms = atoms;
  m.phases.assign(atoms, 0.0);
  m.rabi = 1.0;
  return m;
}

qcore::EmitterModel kerr_model(int n_max, double drive = 0.2) {
  qcore::KerrMode m;
  m.n_max = n_max;
  m.kerr = 0.5;
  m.drive = drive;
  return m;
}

void BM_MomentTableAtoms(benchmark::State& state) {
  const auto model = atom_model(static_cast<int>(state.range(0)));
  const auto rho = dynamics::steady_state(dynamics::liouvillian(model));
  const int order = std::max(2, (static_cast<int>(state.range(0)) + 2) / 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(witness::moment_table(model, rho, order));
}
BENCHMARK(BM_MomentTableAtoms)->Arg(1)->Arg(2)->Arg(3);

void BM_MomentTableKerr(benchmark::State& state) {
  const auto model = kerr_model(12);
  const auto rho = dynamics::steady_state(dynamics::liouvillian(model));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        witness::moment_table(model, rho, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_MomentTableKerr)->Arg(1)->Arg(2)->Arg(3);

void BM_SteadyState(benchmark::State& state) {
  const auto lv = dynamics::liouvillian(kerr_model(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(dynamics::steady_state(lv));
}
BENCHMARK(BM_SteadyState)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_RelaxedState(benchmark::State& state) {
  const auto model = kerr_model(10, 0.3);
  const auto lv = dynamics::liouvillian(model);
  const auto rho0 = qcore::ground_state(model);
  for (auto _ : state)
    benchmark::DoNotOptimize(dynamics::relaxed_state(lv, rho0));
}
BENCHMARK(BM_RelaxedState)->Unit(benchmark::kMillisecond);

void BM_SplitVerdict(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  const auto model = atom_model(2);
  const auto rho = dynamics::steady_state(dynamics::liouvillian(model));
  const auto table = witness::moment_table(model, rho, 2);
  std::vector<Complex> chi(modes, Complex{0.7, 0.2});
  const opalg::ModeGeometry geometry(chi);
  const auto idx = opalg::full_multi_set(modes, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(witness::entanglement_verdict(table, geometry, idx, {2}));
}
BENCHMARK(BM_SplitVerdict)->Arg(2)->Arg(3)->Arg(4);

void BM_MultipartiteScan(benchmark::State& state) {
  const auto model = atom_model(2);
  const auto rho = dynamics::steady_state(dynamics::liouvillian(model));
  const auto table = witness::moment_table(model, rho, 2);
  const int modes = static_cast<int>(state.range(0));
  std::vector<Complex> chi(modes, Complex{0.7, 0.2});
  const opalg::ModeGeometry geometry(chi);
  const auto idx = opalg::full_multi_set(modes, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(witness::multipartite_scan(table, geometry, idx));
}
BENCHMARK(BM_MultipartiteScan)->Arg(3)->Arg(4);

void BM_SplitTranspose(benchmark::State& state) {
  const int n_max = static_cast<int>(state.range(0));
  const auto rho = dynamics::steady_state(dynamics::liouvillian(kerr_model(n_max)));
  const double r = 1.0 / std::sqrt(2.0);
  const oracle::SplitterSpec spec({Complex{r, 0}, Complex{r, 0}});
  for (auto _ : state) {
    const auto split = oracle::split_state(rho, spec);
    benchmark::DoNotOptimize(oracle::pt_min_eigenvalue(split, {2}));
  }
}
BENCHMARK(BM_SplitTranspose)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_IntensityCorrelation(benchmark::State& state) {
  const auto model = atom_model(1);
  const auto lv = dynamics::liouvillian(model);
  const auto rho = dynamics::steady_state(lv);
  const auto s = qcore::source_operator(model);
  const int points = static_cast<int>(state.range(0));
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) grid.push_back(5.0 * i / (points - 1));
  for (auto _ : state)
    benchmark::DoNotOptimize(dynamics::intensity_correlation(lv, rho, s, grid));
}
BENCHMARK(BM_IntensityCorrelation)->Arg(51)->Arg(201)->Unit(benchmark::kMillisecond);

void BM_RunScenario(benchmark::State& state) {
  const auto s = scenario::parse_scenario(
      "[model]\n"
      "type = ensemble\n"
      "atoms = 1\n"
      "rabi = 1.0\n"
      "[geometry]\n"
      "chi = 0.8, 0.5+0.3i\n"
      "[correlation]\n"
      "tau_max = 5.0\n"
      "points = 101\n");
  for (auto _ : state) benchmark::DoNotOptimize(runner::run_scenario(s, 0));
}
BENCHMARK(BM_RunScenario)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

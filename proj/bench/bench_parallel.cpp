// Serial reference vs OpenMP kernels on the same workloads. Outputs are
// identical under both policies (checked in the unit tests); only time differs.

#include <numeric>

#include <benchmark/benchmark.h>

#include "adaptlqr/estimator.hpp"
#include "adaptlqr/metrics.hpp"
#include "adaptlqr/platoon.hpp"
#include "adaptlqr/sim.hpp"

using namespace adaptlqr;

namespace {

ExecPolicy policy_of(const benchmark::State& state) { return state.range(0) ? ExecPolicy::Parallel : ExecPolicy::Serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "openmp" : "serial"); }

void BM_EnsembleAdaptive(benchmark::State& state) {
  const PlantFamily f = build_platoon();
  const Strategy s(StrategySpec{StrategyKind::ModifiedCK, {}}, f, *f.nominal);
  SimConfig cfg;
  cfg.horizon = 500;
  cfg.record_stride = 100;
  std::vector<std::uint64_t> traj(8);
  std::iota(traj.begin(), traj.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(*f.nominal, s, cfg, traj, policy_of(state)));
  label(state);
}
BENCHMARK(BM_EnsembleAdaptive)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EnsembleStatic(benchmark::State& state) {
  const PlantFamily f = build_platoon();
  const Strategy s(StrategySpec{StrategyKind::OptimalFullInfo, {}}, f, *f.nominal);
  SimConfig cfg;
  cfg.horizon = 50000;
  cfg.record_stride = 1000;
  std::vector<std::uint64_t> traj(8);
  std::iota(traj.begin(), traj.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(*f.nominal, s, cfg, traj, policy_of(state)));
  label(state);
}
BENCHMARK(BM_EnsembleStatic)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_AnalyticRatioGrid(benchmark::State& state) {
  const PlantFamily f = build_platoon();
  for (auto _ : state)
    benchmark::DoNotOptimize(analytic_ratio_static(f, StrategySpec{StrategyKind::Deadbeat, {}}, 8, policy_of(state)));
  label(state);
}
BENCHMARK(BM_AnalyticRatioGrid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SimulatedRatios(benchmark::State& state) {
  const PlantFamily f = build_platoon();
  RatioOptions o;
  o.n_plants = 4;
  o.horizon = 300;
  o.record_stride = 100;
  o.policy = policy_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_ratios(f, StrategySpec{StrategyKind::ModifiedCK, {}}, o));
  label(state);
}
BENCHMARK(BM_SimulatedRatios)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MultiStart(benchmark::State& state) {
  const PlantFamily f = build_platoon();
  const PlantInstance truth = *f.nominal;
  const EstimationProblem prob(f, centralized_mask(f), truth);
  History h(3, 2);
  Vec x(3, 0.0);
  h.reset(x);
  for (int k = 0; k < 200; ++k) {
    const Vec u{std::sin(0.3 * k), std::cos(0.7 * k)};
    Vec next = truth.a * x;
    const Vec bu = truth.b * u;
    for (int i = 0; i < 3; ++i) next[i] += bu[i] + 0.1 * std::sin(1.3 * k + i);
    h.append(u, next);
    x = next;
  }
  EstimatorOptions o;
  o.parallel_starts = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(cbml_minimize(prob, 2.0, h, nullptr, 5, o));
  label(state);
}
BENCHMARK(BM_MultiStart)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

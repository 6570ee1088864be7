#include <benchmark/benchmark.h>

#include "geoflow/chain.hpp"
#include "geoflow/evt.hpp"
#include "geoflow/sim.hpp"

using namespace geoflow;

static void BM_SampleHeight(benchmark::State& state) {
  RandomStream stream(1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_height(stream, 0.5));
}
BENCHMARK(BM_SampleHeight);

static void BM_MaxHeightExactRational(benchmark::State& state) {
  const Chain<Rational> chain(make_pure_ray(2));
  for (auto _ : state) benchmark::DoNotOptimize(max_height_exact(chain, 10, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_MaxHeightExactRational)->Arg(4)->Arg(12);

static void BM_MaxHeightExactDouble(benchmark::State& state) {
  const Chain<double> chain(make_star(3, 4));
  for (auto _ : state) benchmark::DoNotOptimize(max_height_exact(chain, 100, 12));
}
BENCHMARK(BM_MaxHeightExactDouble);

static void BM_Stationary(benchmark::State& state) {
  const auto chain = build_chain(make_star(2, static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(stationary_distribution(chain).residual);
}
BENCHMARK(BM_Stationary)->Arg(1)->Arg(16);

static void BM_TrajectoryFixedTime(benchmark::State& state) {
  const TrajectorySampler sampler(make_pure_ray(2));
  const auto sampler_kind = state.range(0) == 0 ? Sampler::Direct : Sampler::Walk;
  std::uint64_t i = 0;
  for (auto _ : state) {
    RandomStream stream(trial_seed(7, i++));
    benchmark::DoNotOptimize(sampler.run(stream, FixedTime{16384.0}, sampler_kind, false).h);
  }
}
BENCHMARK(BM_TrajectoryFixedTime)->Arg(0)->Arg(1);

static void BM_MonteCarlo(benchmark::State& state) {
  RunConfig cfg;
  cfg.model = make_pure_ray(2);
  cfg.horizon = FixedCount{1024};
  cfg.trials = 2000;
  cfg.master_seed = 3;
  cfg.workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_monte_carlo(cfg).h.size());
}
BENCHMARK(BM_MonteCarlo)->Arg(1)->Arg(4)->UseRealTime();

BENCHMARK_MAIN();

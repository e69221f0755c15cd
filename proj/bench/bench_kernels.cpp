#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "nvqpe/inference.hpp"
#include "nvqpe/simulator.hpp"

using namespace nvqpe;

namespace {

std::vector<double> random_logs(std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <Exec E>
void BM_NormalizeLog(benchmark::State& state) {
  const auto base = random_logs(static_cast<std::size_t>(state.range(0)));
  std::vector<double> v;
  for (auto _ : state) {
    v = base;
    benchmark::DoNotOptimize(kernels::normalize_log(v, E));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <Exec E>
void BM_BatchExactUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DetectionModel m = DetectionModel::totals(0.0322, 0.0206);
  const RamseySetting s{12.5e-9 * 4, 0.3, 1.3e-6};
  const BatchRecord rec{70, 2500, s};
  FrequencyDistribution dist = uniform_prior(12.5e-9, n);
  const auto fringe = fringe_values(dist, s);
  for (auto _ : state) {
    update_batch_exact(dist, rec, m, fringe, E);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PhaseBasisFringe(benchmark::State& state) {
  const auto dist = uniform_prior(12.5e-9, static_cast<std::size_t>(state.range(0)));
  const PhaseBasis basis(dist, 12.5e-9 * 8);
  std::vector<double> out;
  double theta = 0.0;
  for (auto _ : state) {
    basis.fringe(theta, out);
    theta += 0.1;
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// Trial-level parallelism of a small sweep; range(0) is the thread count.
void BM_SweepThreads(benchmark::State& state) {
  ProtocolParams p;
  p.K = 4;
  p.G = 4;
  p.R = 200;
  SweepSpec spec{p, {Mode::batch, Mode::threshold}, SweepAxis::R, {200}};
  TrialConfig trials;
  trials.n_trials = 16;
  SimOptions opts;
  opts.trial.grid_size = 2048;
  opts.threads = static_cast<int>(state.range(0));
  const auto models = ObservationModels::counting_only(DetectionModel::totals(0.0322, 0.0206));
  for (auto _ : state) benchmark::DoNotOptimize(run_sweeps(std::span<const SweepSpec>(&spec, 1), trials, models, opts));
}

}  // namespace

BENCHMARK(BM_NormalizeLog<Exec::serial>)->Arg(4096)->Arg(8192)->Arg(65536);
BENCHMARK(BM_NormalizeLog<Exec::parallel>)->Arg(4096)->Arg(8192)->Arg(65536);
BENCHMARK(BM_BatchExactUpdate<Exec::serial>)->Arg(8192)->Arg(65536);
BENCHMARK(BM_BatchExactUpdate<Exec::parallel>)->Arg(8192)->Arg(65536);
BENCHMARK(BM_PhaseBasisFringe)->Arg(8192);
BENCHMARK(BM_SweepThreads)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

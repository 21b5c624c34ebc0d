// Level estimation: direct reference vs reduced isotropic kernel, serial and threaded.
#include <benchmark/benchmark.h>

#include "rpod/level_kernels.hpp"
#include "rpod/parallel.hpp"
#include "rpod/reference.hpp"
#include "rpod/stats_core.hpp"

namespace {

constexpr double kA = 0.0333, kB = 4.987;
constexpr std::size_t kN = 50, kReps = 200;

void BM_Direct(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const double t = rpod::threshold_cnd(kN, d, 0.05).c_nd;
  for (auto _ : state)
    benchmark::DoNotOptimize(rpod::reference::estimate_level_direct(kA, kB, kN, d, t, kReps, 1));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * kReps));
}

void isotropic(benchmark::State& state, int threads) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const double t = rpod::threshold_cnd(kN, d, 0.05).c_nd;
  rpod::LevelOptions opts;
  opts.threads = threads;
  for (auto _ : state)
    benchmark::DoNotOptimize(rpod::estimate_level_isotropic(kA, kB, kN, d, t, kReps, 1, opts));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * kReps));
}

void BM_IsotropicSerial(benchmark::State& state) { isotropic(state, 1); }
void BM_IsotropicParallel(benchmark::State& state) { isotropic(state, rpod::available_threads()); }

}  // namespace

BENCHMARK(BM_Direct)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IsotropicSerial)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IsotropicParallel)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

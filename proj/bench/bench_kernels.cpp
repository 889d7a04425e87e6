// Serial reference kernels against the OpenMP versions on one calibrated MGM
// dataset. Run with OMP_NUM_THREADS to vary the parallel side.

#include <map>

#include <benchmark/benchmark.h>

#include "kccsd/reference.hpp"
#include "kccsd/statistics.hpp"

namespace {

using namespace kccsd;

struct Fixture {
  Dataset data;
  std::vector<ScoredDensity> models;
  GramMatrix kg;
  ScalarKernel l = ScalarKernel::gaussian(1.0);
  Matrix h;

  explicit Fixture(std::size_t n) {
    RandomStream s(7);
    SyntheticSetup setup{Family::MGM, 0.0, MgmShift::AllOnes};
    data = sample_setup(setup, n, s);
    models = models_of(data);
    RandomStream g = s.derive("gram");
    kg = gram(exp_gfd_kernel(), models, g);
    l = ScalarKernel::gaussian(median_heuristic(targets_of(data)));
    h = kccsd_matrix(kg.values, l, data).entries();
  }
};

const Fixture& fixture(std::size_t n) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, Fixture(n)).first;
  return it->second;
}

void BM_GramParallel(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    RandomStream s(1);
    benchmark::DoNotOptimize(gram(f.kg.kernel, f.models, s).values.data());
  }
}

void BM_GramReference(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::gram_values(f.kg.kernel, f.models).data());
}

void BM_SteinParallel(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kccsd_matrix(f.kg.values, f.l, f.data).entries().data());
}

void BM_SteinReference(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::kccsd_matrix(f.kg.values, f.l, f.data).data());
}

void BM_BootstrapParallel(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  const StatMatrix m(f.h);
  for (auto _ : state) {
    RandomStream s(3);
    benchmark::DoNotOptimize(wild_bootstrap(m, 500, 0.05, s).quantile);
  }
}

void BM_BootstrapReference(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    RandomStream s(3);
    benchmark::DoNotOptimize(reference::wild_bootstrap(f.h, 500, 0.05, s).quantile);
  }
}

}  // namespace

BENCHMARK(BM_GramParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramReference)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SteinParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SteinReference)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BootstrapParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BootstrapReference)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

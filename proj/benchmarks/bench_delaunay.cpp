// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <benchmark/benchmark.h>

#include "gof/delaunay.hpp"

namespace {

void BM_Delaunay(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<gof::Vec3> points(static_cast<size_t>(state.range(0)));
  for (auto& p : points) p = gof::Vec3(u(rng), u(rng), u(rng));
  for (auto _ : state) benchmark::DoNotOptimize(gof::delaunay(points));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Delaunay)->RangeMultiplier(4)->Range(256, 16384)->Complexity()->Unit(benchmark::kMillisecond);

}  // namespace

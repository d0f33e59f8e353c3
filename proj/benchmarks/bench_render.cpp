// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <benchmark/benchmark.h>

#include "gof/oracles/fixtures.hpp"
#include "gof/renderer.hpp"

namespace {

void BM_RenderView(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const gof::PreparedScene scene(gof::oracle::random_scene(rng, static_cast<int>(state.range(0))));
  const auto views = gof::oracle::orbit_rig(1, 5.0, gof::Vec3::Zero(), 128, 128, 50.0);
  const gof::SceneConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(gof::render_view(scene, views[0], config));
  state.SetItemsProcessed(state.iterations() * 128 * 128);
}
BENCHMARK(BM_RenderView)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_GatherRay(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const gof::PreparedScene scene(gof::oracle::random_scene(rng, 1000));
  const gof::SceneConfig config;
  const gof::Vec3 origin(0, 0, -5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gof::gather_ray(scene, origin, gof::Vec3(0.01, -0.02, 1).normalized(), config));
  }
}
BENCHMARK(BM_GatherRay)->Unit(benchmark::kMicrosecond);

}  // namespace

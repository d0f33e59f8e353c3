// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <benchmark/benchmark.h>

#include "gof/opacity_field.hpp"
#include "gof/oracles/fixtures.hpp"
#include "gof/tetra_mesher.hpp"

namespace {

void BM_FieldOpacity(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto gaussians = gof::oracle::random_scene(rng, static_cast<int>(state.range(0)));
  const gof::PreparedScene scene(gaussians);
  const auto views = gof::oracle::orbit_rig(8, 5.0, gof::Vec3::Zero(), 64, 64, 50.0);
  const gof::SceneConfig config;
  const auto grid = gof::generate_vertices(gaussians, config);
  for (auto _ : state) benchmark::DoNotOptimize(gof::field_opacity(scene, views, grid.points, config));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(grid.points.size() * views.size()));
}
BENCHMARK(BM_FieldOpacity)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_ExtractMesh(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const auto gaussians = gof::oracle::random_scene(rng, 100);
  const auto views = gof::oracle::orbit_rig(8, 5.0, gof::Vec3::Zero(), 64, 64, 50.0);
  const gof::SceneConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(gof::extract_mesh(gaussians, views, config));
}
BENCHMARK(BM_ExtractMesh)->Unit(benchmark::kMillisecond);

}  // namespace

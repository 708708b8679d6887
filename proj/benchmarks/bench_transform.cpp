// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "bubbletx/harness.hpp"

using namespace bubbletx;

namespace {

const SimplicialComplex& mesh_for_level(int level)
{
  static std::vector<SimplicialComplex> meshes = [] {
    std::vector<SimplicialComplex> out;
    out.push_back(make_square_mesh());
    for (int i = 0; i < 3; ++i)
      out.push_back(refine_uniform(out.back()));
    return out;
  }();
  return meshes[level];
}

void BM_WeightBuild(benchmark::State& state)
{
  const auto& mesh = mesh_for_level(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto weights = WeightFamily::build(mesh);
    benchmark::DoNotOptimize(weights);
  }
  state.SetLabel(std::to_string(mesh.num_cells()) + " cells");
}

void BM_BubbleTransform(benchmark::State& state)
{
  const auto& mesh = mesh_for_level(static_cast<int>(state.range(0)));
  const int k = static_cast<int>(state.range(1));
  const auto weights = WeightFamily::build(mesh);
  const auto u = random_form(mesh, k, 2, FormClass::Pr, 1);
  for (auto _ : state) {
    auto decomp = bubble_transform(mesh, k, u, weights);
    benchmark::DoNotOptimize(decomp);
  }
  state.SetLabel(std::to_string(mesh.num_cells()) + " cells, k=" + std::to_string(k));
}

void BM_Average(benchmark::State& state)
{
  const auto& mesh = mesh_for_level(2);
  const auto u = random_form(mesh, 1, static_cast<int>(state.range(0)), FormClass::Pr, 1);
  const IndexSet f = mesh.simplices(1)[mesh.num_simplices(1) / 2];
  for (auto _ : state) {
    auto a = average(mesh, f, 1, u);
    benchmark::DoNotOptimize(a);
  }
}

void BM_CutoffGlobal(benchmark::State& state)
{
  const auto& mesh = mesh_for_level(1);
  const auto weights = WeightFamily::build(mesh);
  const auto u = random_form(mesh, 1, 2, FormClass::Pr, 1);
  for (auto _ : state) {
    auto c = cutoff_global(mesh, 0, 1, u, weights);
    benchmark::DoNotOptimize(c);
  }
}

}  // namespace

BENCHMARK(BM_WeightBuild)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BubbleTransform)->Args({0, 1})->Args({1, 1})->Args({2, 1})->Args({1, 2})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Average)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CutoffGlobal)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "rcap/capacity.hpp"
#include "rcap/fpp.hpp"
#include "rcap/pathflow.hpp"
#include "rcap/shortest_path.hpp"

using namespace rcap;

static void BM_SolvePotential(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  const double r = state.range(1) / 10.0;
  auto dom = build_full_box(2, M);
  for (auto _ : state) {
    auto sol = solve_potential(dom, r);
    benchmark::DoNotOptimize(sol.estimate.value);
    state.counters["sweeps"] = static_cast<double>(sol.estimate.iterations);
  }
  state.SetComplexityN(static_cast<long>(dom->num_vertices()));
}
BENCHMARK(BM_SolvePotential)->Args({16, 20})->Args({32, 20})->Args({64, 20})->Args({32, 15})->Args({32, 30})
    ->Unit(benchmark::kMillisecond);

static void BM_Dijkstra(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto dom = passage_box(2, n, 1.0);
  RandomStream rng(1, 0, 0);
  auto cfg = sample_weights(dom, WeightModel{1.0, 1.0, 0.0}, rng);
  ShortestPaths sp(dom);
  const VertexId src = dom->source();
  for (auto _ : state) {
    const auto& dist = sp.distances(cfg.tau, std::span(&src, 1));
    benchmark::DoNotOptimize(dist.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(dom->num_vertices()));
}
BENCHMARK(BM_Dijkstra)->RangeMultiplier(2)->Range(16, 256)->Unit(benchmark::kMicrosecond);

static void BM_PointToPoint(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto dom = passage_box(2, n, 1.0);
  RandomStream rng(2, 0, 0);
  auto cfg = sample_weights(dom, WeightModel{1.0, 0.5, 0.0}, rng);
  Point end{};
  end[0] = n;
  const VertexId src = dom->source(), dst = *dom->index_of(end);
  for (auto _ : state) benchmark::DoNotOptimize(passage_time(cfg, src, dst).value);
}
BENCHMARK(BM_PointToPoint)->RangeMultiplier(2)->Range(8, 64)->Unit(benchmark::kMicrosecond);

static void BM_EdgeMarginals(benchmark::State& state) {
  auto dom = build_full_box(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto m = edge_marginals(dom);
    benchmark::DoNotOptimize(m.counts.data());
  }
}
BENCHMARK(BM_EdgeMarginals)->Args({2, 64})->Args({2, 256})->Args({3, 16})->Unit(benchmark::kMillisecond);

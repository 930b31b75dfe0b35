#include <benchmark/benchmark.h>

#include <random>

#include "kct/kernels.hpp"
#include "oracles.hpp"

using namespace kct;

namespace {

/// Random layered mission with exactly `tasks` tasks and `assets` assets.
MissionDefinition mission_of_size(std::size_t tasks, std::size_t assets) {
  std::mt19937_64 rng(tasks * 1000 + assets);
  const oracle::RandomMissionShape shape{tasks, assets, 0.12, 0.05};
  for (;;) {
    auto def = oracle::random_mission(rng, shape);
    if (def.tasks.size() == tasks && def.assets.size() == assets) return def;
  }
}

struct Fixture {
  MissionModel model;
  ScoringProblem problem;
};

const Fixture& fixture_for(const benchmark::State& state) {
  static std::map<std::pair<long, long>, Fixture> cache;
  const auto key = std::make_pair(state.range(0), state.range(1));
  auto it = cache.find(key);
  if (it == cache.end()) {
    const auto def = mission_of_size(static_cast<std::size_t>(key.first), static_cast<std::size_t>(key.second));
    MissionModel m(def);
    std::mt19937_64 rng(7);
    auto p = build_problem(m, oracle::random_metric(rng, def), oracle::random_metric(rng, def));
    it = cache.emplace(key, Fixture{std::move(m), std::move(p)}).first;
  }
  return it->second;
}

void sizes(benchmark::internal::Benchmark* b) {
  for (auto [t, a] : {std::pair{8, 12}, {16, 24}, {24, 40}}) b->Args({t, a});
}

template <bool Parallel>
void BM_Atas(benchmark::State& state) {
  const auto& f = fixture_for(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? parallel::atas_matrix(f.model) : serial::atas_matrix(f.model));
}

template <bool Parallel>
void BM_Tsas(benchmark::State& state) {
  const auto& f = fixture_for(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? parallel::tsas_vector(f.model, TsasOrientation::dependents)
                                      : serial::tsas_vector(f.model, TsasOrientation::dependents));
}

template <bool Parallel>
void BM_Tacs(benchmark::State& state) {
  const auto& f = fixture_for(state);
  const ScoreWeights w;
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? parallel::tacs_matrix(f.problem, w) : serial::tacs_matrix(f.problem, w));
}

}  // namespace

BENCHMARK(BM_Atas<false>)->Name("atas/serial")->Apply(sizes);
BENCHMARK(BM_Atas<true>)->Name("atas/parallel")->Apply(sizes);
BENCHMARK(BM_Tsas<false>)->Name("tsas/serial")->Apply(sizes);
BENCHMARK(BM_Tsas<true>)->Name("tsas/parallel")->Apply(sizes);
BENCHMARK(BM_Tacs<false>)->Name("tacs/serial")->Apply(sizes);
BENCHMARK(BM_Tacs<true>)->Name("tacs/parallel")->Apply(sizes);

BENCHMARK_MAIN();

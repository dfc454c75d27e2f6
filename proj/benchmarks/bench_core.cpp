#include <benchmark/benchmark.h>

#include <vector>

#include "suan/bound.hpp"
#include "suan/matrix.hpp"
#include "suan/rng.hpp"
#include "suan/scenario.hpp"
#include "suan/trainer.hpp"
#include "suan/weighting.hpp"

using namespace suan;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(36)->Arg(72);

void BM_NormalizeWeights(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> w(static_cast<std::size_t>(state.range(0)));
  for (double& v : w) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(normalize_weights(w, {1}));
}
BENCHMARK(BM_NormalizeWeights)->Arg(36)->Arg(1024);

void BM_ComplexityTerm(benchmark::State& state) {
  double m = 36.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(complexity_term(3, 1.2, m, 0.05));
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_ComplexityTerm);

void BM_TrainStep(benchmark::State& state) {
  const Scenario sc = build_scenario(ScenarioConfig{});
  TrainConfig cfg;
  cfg.mode = static_cast<TrainMode>(state.range(0));
  Rng rng(3);
  TrainerState st{SuanModel::create(3, 6, cfg.shape, cfg.mode == TrainMode::kUanWeighting, rng),
                  MarginRegister(6), {}, 0};
  BalancedBatches src(sc.source.labels, cfg.batch_size, 4);
  ShuffledBatches tgt(sc.target.size(), cfg.batch_size, 5);
  for (auto _ : state) {
    const Dataset s = sc.source.select(src.next()), t = sc.target.select(tgt.next());
    benchmark::DoNotOptimize(train_step(st, {s, t, &sc.label_sets, nullptr}, cfg, 1));
  }
  state.SetLabel(std::string(to_string(cfg.mode)));
}
BENCHMARK(BM_TrainStep)->DenseRange(0, 3);

}  // namespace
BENCHMARK_MAIN();

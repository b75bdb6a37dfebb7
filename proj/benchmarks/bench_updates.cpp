#include <benchmark/benchmark.h>

#include "ptn/data.hpp"
#include "ptn/dmrg.hpp"
#include "ptn/grad.hpp"
#include "ptn/model.hpp"
#include "ptn/train.hpp"

namespace {

ptn::DiscreteDataset random_batch(std::size_t rows, std::size_t cols, int dim, ptn::Rng& rng) {
  std::vector<int> values(rows * cols);
  for (int& v : values) v = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(dim)));
  return ptn::DiscreteDataset(cols, std::vector<int>(cols, dim), std::move(values));
}

void BM_ScaledSgdUpdate(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::size_t rank = static_cast<std::size_t>(state.range(1));
  ptn::Rng rng(7);
  std::vector<int> dims(n, 2);
  ptn::MpsModel model = ptn::MpsModel::random(ptn::PositivityMode::sigma_exp, dims, rank, rng);
  const auto data = random_batch(32, n, 2, rng);
  ptn::Optimizer opt(ptn::OptimizerKind::sgd, 5e-3);
  for (auto _ : state) {
    const auto lg = ptn::grad_nll(model, data.view());
    opt.step(model, lg.grads);
    benchmark::DoNotOptimize(lg.loss);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()));
}

void BM_DmrgSweep(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::size_t rank = static_cast<std::size_t>(state.range(1));
  ptn::Rng rng(7);
  std::vector<int> dims(n, 2);
  ptn::MpsModel model = ptn::MpsModel::random(ptn::PositivityMode::born, dims, rank, rng);
  const auto data = random_batch(32, n, 2, rng);
  ptn::DmrgConfig config;
  config.max_rank = rank;
  config.learning_rate = 0.02;
  ptn::DmrgSweeper sweeper(model, config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sweeper.sweep(data.view()));
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()));
}

void BM_LogZ(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  ptn::Rng rng(7);
  std::vector<int> dims(n, 2);
  ptn::MpsModel model = ptn::MpsModel::random(ptn::PositivityMode::sigma_exp, dims, 8, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ptn::log_z_sigma(model));
}

}  // namespace

BENCHMARK(BM_ScaledSgdUpdate)->Args({100, 8})->Args({1000, 8})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DmrgSweep)->Args({100, 8})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LogZ)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();

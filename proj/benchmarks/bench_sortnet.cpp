#include <benchmark/benchmark.h>

#include <vector>

#include "drpo/losses.hpp"
#include "drpo/random.hpp"
#include "drpo/sortnet.hpp"

using namespace drpo;

namespace {

std::vector<double> random_scores(std::size_t k) {
  Rng rng(k);
  std::vector<double> xs(k);
  for (double& x : xs) x = rng.uniform(-2.0, 2.0);
  return xs;
}

void BM_SoftSort(benchmark::State& state, NetworkKind kind) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto xs = random_scores(k);
  const auto schedule = make_schedule(kind, k);
  Tape t;
  for (auto _ : state) {
    t.clear();
    std::vector<Value> leaves;
    for (double x : xs) leaves.push_back(t.leaf(x, true));
    benchmark::DoNotOptimize(soft_sort(leaves, schedule, 1.0).p_soft.matrix());
  }
}

void BM_LossBackward(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto xs = random_scores(k);
  std::vector<double> rel(k);
  for (std::size_t i = 0; i < k; ++i) rel[i] = static_cast<double>(i) / static_cast<double>(k);
  const auto schedule = odd_even_schedule(k);
  Tape t;
  for (auto _ : state) {
    t.clear();
    std::vector<Value> leaves;
    for (double x : xs) leaves.push_back(t.leaf(x, true));
    const Value loss = drpo_loss(soft_sort(leaves, schedule, 1.0).p_soft, rel, DiscountScheme::InvLog);
    benchmark::DoNotOptimize(t.backward(loss).gather(leaves));
  }
}

void BM_HardSchedule(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto xs = random_scores(k);
  const auto schedule = odd_even_schedule(k);
  for (auto _ : state) benchmark::DoNotOptimize(apply_hard(schedule, xs));
}

}  // namespace

BENCHMARK_CAPTURE(BM_SoftSort, odd_even, NetworkKind::OddEven)->RangeMultiplier(2)->Range(2, 32);
BENCHMARK_CAPTURE(BM_SoftSort, bitonic, NetworkKind::Bitonic)->RangeMultiplier(2)->Range(2, 32);
BENCHMARK(BM_LossBackward)->RangeMultiplier(2)->Range(2, 32);
BENCHMARK(BM_HardSchedule)->RangeMultiplier(2)->Range(2, 32);

BENCHMARK_MAIN();

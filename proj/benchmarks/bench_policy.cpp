#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "drpo/policy.hpp"

using namespace drpo;

namespace {

const TokenSeq kPrompt = tokenize("rank these answers please");

TokenSeq response_of(std::size_t len) { return tokenize(std::string(len, 'q')); }

void BM_LogProb(benchmark::State& state) {
  const auto policy = TinyPolicy::init(1, 128, static_cast<std::size_t>(state.range(1)));
  const auto resp = response_of(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(policy.log_prob(kPrompt, resp));
}

void BM_LogProbGradient(benchmark::State& state) {
  const auto policy = TinyPolicy::init(1, 128, static_cast<std::size_t>(state.range(1)));
  const auto resp = response_of(static_cast<std::size_t>(state.range(0)));
  std::vector<double> grad(policy.params().size());
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0);
    benchmark::DoNotOptimize(policy.log_prob(kPrompt, resp, grad));
  }
}

void BM_LogProbTape(benchmark::State& state) {
  const auto policy = TinyPolicy::init(1, 128, static_cast<std::size_t>(state.range(1)));
  const auto resp = response_of(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Tape t;
    const PolicyBinding bind(policy, t);
    benchmark::DoNotOptimize(bind.gradient(t.backward(bind.log_prob(kPrompt, resp))));
  }
}

}  // namespace

BENCHMARK(BM_LogProb)->ArgsProduct({{8, 24, 64}, {16, 32}});
BENCHMARK(BM_LogProbGradient)->ArgsProduct({{8, 24, 64}, {16, 32}});
BENCHMARK(BM_LogProbTape)->ArgsProduct({{8, 24, 64}, {16}});

BENCHMARK_MAIN();

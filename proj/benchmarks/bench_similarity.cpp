#include <benchmark/benchmark.h>

#include <string>

#include "stepfill/rng.hpp"
#include "stepfill/similarity.hpp"

namespace {

std::string random_text(stepfill::SplitMix64& rng, std::size_t n) {
  static constexpr char kAlphabet[] = "abcdefgh ijk=+0123456789";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += kAlphabet[rng.below(sizeof kAlphabet - 1)];
  return s;
}

void BM_Similarity(benchmark::State& state) {
  stepfill::SplitMix64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_text(rng, n);
  const auto b = random_text(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(stepfill::similarity(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Similarity)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_SimilarityTypicalSteps(benchmark::State& state) {
  const std::string a = "Compute 5 * 4 = 20.";
  const std::string b = "Compute 20 - 5 = 15.";
  for (auto _ : state) benchmark::DoNotOptimize(stepfill::similarity(a, b));
}
BENCHMARK(BM_SimilarityTypicalSteps);

}  // namespace

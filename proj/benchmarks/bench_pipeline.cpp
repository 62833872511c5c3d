#include <benchmark/benchmark.h>

#include <string>
#include <unordered_map>
#include <vector>

#include "stepfill/expansion_engine.hpp"
#include "stepfill/fim_builder.hpp"
#include "stepfill/step_decomposer.hpp"
#include "stepfill/synthetic_corpus.hpp"

namespace {

const std::string kSolution =
    "First, convert the percentage to a decimal: $15\\% = 0.15$. Next, multiply $0.15 \\times 240 = 36$. "
    "By the Pythagorean theorem, \\begin{align} c^2 &= 6^2 + 8^2 \\\\ &= 100. \\end{align} Taking the square "
    "root, $c = 10$. Step 3: We use $$S = \\frac{n(n+1)}{2}.$$ Therefore the answer is $\\boxed{55}$.";

void BM_Decompose(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < state.range(0); ++i) text += kSolution + " ";
  for (auto _ : state) benchmark::DoNotOptimize(stepfill::decompose(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Decompose)->Arg(1)->Arg(16)->Arg(256);

std::vector<stepfill::ChainRecord> coarse_corpus(std::size_t n) {
  stepfill::CorpusSpec spec;
  spec.count = n;
  spec.seed = 1;
  spec.ops_max = 6;
  std::vector<stepfill::ChainRecord> out;
  for (const auto& p : stepfill::generate(spec)) out.push_back(stepfill::coarse_record(p));
  return out;
}

void BM_BuildFim(benchmark::State& state) {
  const auto records = coarse_corpus(1000);
  for (auto _ : state) benchmark::DoNotOptimize(stepfill::build_fim_corpus(records, stepfill::SamplerConfig{3, 7}));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * records.size() * 3));
}
BENCHMARK(BM_BuildFim)->Unit(benchmark::kMillisecond);

void BM_ExpandReplay(benchmark::State& state) {
  const auto records = coarse_corpus(1000);
  // Record the oracle once, then measure replay only.
  stepfill::OracleBackend oracle;
  std::unordered_map<std::string, std::string> fixture;
  stepfill::ExpansionConfig record_cfg;
  record_cfg.max_in_flight = 1;
  (void)stepfill::expand_dataset(
      records, oracle, record_cfg,
      [&](stepfill::RecordOutcome& o) {
        for (auto& e : o.exchanges) fixture.emplace(e.request.request_id, e.raw_response);
      },
      true);
  stepfill::ReplayBackend replay(std::move(fixture));
  stepfill::ExpansionConfig cfg;
  cfg.max_in_flight = static_cast<std::size_t>(state.range(0));
  std::size_t gaps = 0;
  for (auto _ : state) {
    const auto agg = stepfill::expand_dataset(records, replay, cfg, nullptr);
    gaps += agg.attempted;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(gaps));
}
BENCHMARK(BM_ExpandReplay)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

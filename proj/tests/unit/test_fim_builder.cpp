#include <doctest.h>

#include <set>

#include "stepfill/fim_builder.hpp"
#include "stepfill/rng.hpp"
#include "support.hpp"

using namespace stepfill;

namespace {

StepChain numbered(std::size_t n) {
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < n; ++i) texts.push_back("s" + std::to_string(i + 1) + ".");
  return StepChain::from_texts(texts);
}

}  // namespace

TEST_CASE("format_psm layout") {
  const auto psm = format_psm("Q", "a.", "c.", "b.");
  CHECK(psm.text == "<|fim_prefix|>Q\na.<|fim_suffix|>c.<|fim_middle|>b.");
  CHECK(psm.text.substr(psm.loss_start, psm.loss_end - psm.loss_start) == "b.");
  CHECK(format_psm("Q", "", "", "m").text == "<|fim_prefix|>Q\n<|fim_suffix|><|fim_middle|>m");
}

TEST_CASE("format_psm refuses special-token literals") {
  CHECK_ERRC(format_psm("Q<|fim_middle|>", "a", "b", "c"), Errc::SpecialTokenCollision);
  CHECK_ERRC(format_psm("Q", "a", "b", "<|fim_prefix|>"), Errc::SpecialTokenCollision);
}

TEST_CASE("parse_psm") {
  const auto seg = parse_psm(format_psm("Q", "a.", "c.", "b.").text);
  CHECK(seg == PsmSegments{"Q\na.", "c.", "b."});
  CHECK_ERRC(parse_psm("<|fim_prefix|>a<|fim_suffix|>b<|fim_middle|>c<|fim_middle|>"), Errc::MalformedPsm);
  CHECK_ERRC(parse_psm("<|fim_prefix|>a<|fim_middle|>c<|fim_suffix|>b"), Errc::MalformedPsm);
  CHECK_ERRC(parse_psm("<|fim_prefix|>a<|fim_suffix|>b"), Errc::MalformedPsm);
  CHECK_ERRC(parse_psm("x<|fim_prefix|>a<|fim_suffix|>b<|fim_middle|>c"), Errc::MalformedPsm);
}

TEST_CASE("psm_prompt ends at the middle token") {
  const std::vector<std::string> prefix{"a.", "b."};
  const std::vector<std::string> suffix{"c."};
  CHECK(psm_prompt("Q", prefix, suffix) == "<|fim_prefix|>Q\na.\nb.<|fim_suffix|>c.<|fim_middle|>");
}

TEST_CASE("single-step chain") {
  const auto samples = sample_fim(StepChain::from_texts({"s1"}), "r", "Q", SamplerConfig{3, 1});
  REQUIRE(samples.size() == 3);
  for (const auto& s : samples) {
    CHECK(s.prefix == "");
    CHECK(s.middle == "s1");
    CHECK(s.suffix == "");
    CHECK(s.psm_text == "<|fim_prefix|>Q\n<|fim_suffix|><|fim_middle|>s1");
  }
}

TEST_CASE("samples split the chain around the middle") {
  const auto chain = numbered(5);
  const auto samples = sample_fim(chain, "rec", "Q", SamplerConfig{20, 9});
  REQUIRE(samples.size() == 20);
  for (const auto& s : samples) {
    const auto m = s.middle_index;
    REQUIRE(m < 5);
    CHECK(s.middle == chain.steps[m].text);
    const auto texts = chain.texts();
    CHECK(s.prefix == join(std::span(texts).first(m), "\n"));
    CHECK(s.suffix == join(std::span(texts).subspan(m + 1), "\n"));
    CHECK(reassemble(s.prefix, s.middle, s.suffix) == join(chain));
    CHECK(s.source_id == "rec");
  }
}

TEST_CASE("sampling is reproducible and keyed per record") {
  const auto chain = numbered(5);
  const SamplerConfig cfg{3, 42};
  CHECK(sample_fim(chain, "a", "Q", cfg) == sample_fim(chain, "a", "Q", cfg));

  const std::vector<ChainRecord> forward{{"a", "Q", chain}, {"b", "Q", chain}};
  const std::vector<ChainRecord> backward{{"b", "Q", chain}, {"a", "Q", chain}};
  const auto f = build_fim_corpus(forward, cfg);
  const auto b = build_fim_corpus(backward, cfg);
  REQUIRE(f.size() == 6);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(f[r] == b[3 + r]);
    CHECK(f[r].round == r);
  }
}

TEST_CASE("middle_index is roughly uniform") {
  const auto chain = numbered(4);
  std::vector<std::size_t> hist(4);
  const auto samples = sample_fim(chain, "u", "Q", SamplerConfig{8000, 3});
  for (const auto& s : samples) ++hist[s.middle_index];
  for (auto h : hist) {
    CHECK(h > 1800);
    CHECK(h < 2200);
  }
}

TEST_CASE("corpus errors") {
  const auto chain = numbered(2);
  const std::vector<ChainRecord> dup{{"x", "Q", chain}, {"x", "Q", chain}};
  CHECK_ERRC(build_fim_corpus(dup, SamplerConfig{}), Errc::DuplicateId);
  CHECK_ERRC((SamplerConfig{0, 1}.validate()), Errc::InvalidConfig);
}

TEST_CASE("jsonl round trip") {
  const auto samples = sample_fim(numbered(3), "j", "What is \"x\"?", SamplerConfig{3, 5});
  for (const auto& s : samples) CHECK(parse_fim_sample(to_jsonl(s)) == s);
}

TEST_CASE("random samples satisfy the PSM contract") {
  auto rng = stepfill::SplitMix64(77);
  const char* words[] = {"add", "the", "$x^2$", "é", "7", "=", "\\frac{1}{2}", "so", "\n"};
  for (int t = 0; t < 300; ++t) {
    std::vector<std::string> texts;
    const auto n = 1 + rng.below(6);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string s = "w";
      for (std::uint64_t k = rng.below(6); k > 0; --k) s += std::string(" ") + words[rng.below(9)];
      s += ".";
      texts.push_back(s);
    }
    const auto chain = StepChain::from_texts(texts);
    for (const auto& s : sample_fim(chain, "r" + std::to_string(t), "Question?", SamplerConfig{2, 1})) {
      for (auto tok : kSpecialTokens) CHECK(count_occurrences(s.psm_text, tok) == 1);
      CHECK(s.psm_text.substr(s.loss_char_start, s.loss_char_end - s.loss_char_start) == s.middle);
      CHECK(s.loss_char_end == s.psm_text.size());
      const auto seg = parse_psm(s.psm_text);
      CHECK(seg.head == "Question?\n" + s.prefix);
      CHECK(seg.suffix == s.suffix);
      CHECK(seg.middle == s.middle);
    }
  }
}

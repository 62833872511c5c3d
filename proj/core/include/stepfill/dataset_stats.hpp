#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "stepfill/records.hpp"

namespace stepfill {

/// Pluggable token counter. Absolute counts are only comparable between
/// stats computed with the same id().
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  [[nodiscard]] virtual std::string_view id() const noexcept = 0;
  [[nodiscard]] virtual std::size_t count(std::string_view text) const = 0;
};

/// Counts maximal runs of non-whitespace bytes.
class WhitespaceCounter final : public TokenCounter {
 public:
  [[nodiscard]] std::string_view id() const noexcept override { return "whitespace"; }
  [[nodiscard]] std::size_t count(std::string_view text) const override;
};

/// Counts UTF-8 code points.
class CharCounter final : public TokenCounter {
 public:
  [[nodiscard]] std::string_view id() const noexcept override { return "chars"; }
  [[nodiscard]] std::size_t count(std::string_view text) const override;
};

/// "whitespace" or "chars"; throws Error{InvalidConfig} otherwise.
[[nodiscard]] std::unique_ptr<TokenCounter> make_token_counter(std::string_view id);

struct CorpusStats {
  std::size_t samples = 0;
  double avg_tokens = 0.0;
  std::size_t total_tokens = 0;
  double avg_steps = 0.0;
  std::size_t total_steps = 0;
  std::string tokenizer_id;
};

/// Streaming accumulator; partial sums over shards merge associatively.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(std::string tokenizer_id) : tokenizer_id_(std::move(tokenizer_id)) {}

  /// Tokens are counted over the joined solution (steps joined by the chain separator).
  void add(const StepChain& chain, const TokenCounter& counter);
  void add_counts(std::size_t tokens, std::size_t steps);
  /// Throws Error{TokenizerMismatch} if the other shard used another counter.
  void merge(const StatsAccumulator& other);

  /// Throws Error{EmptyCorpus} if nothing was added.
  [[nodiscard]] CorpusStats finish() const;

 private:
  std::string tokenizer_id_;
  std::size_t samples_ = 0;
  std::size_t tokens_ = 0;
  std::size_t steps_ = 0;
};

/// Single pass over a chain JSONL file.
[[nodiscard]] CorpusStats stats_from_file(const std::filesystem::path& path, const TokenCounter& counter);

struct FieldDelta {
  double before = 0.0;
  double after = 0.0;
  /// (after - before) / before * 100; empty when before == 0 and after != 0.
  std::optional<double> percent;
};

struct StatsDelta {
  std::string tokenizer_id;
  FieldDelta samples;
  FieldDelta avg_tokens;
  FieldDelta total_tokens;
  FieldDelta avg_steps;
};

/// Throws Error{TokenizerMismatch} when the two stats used different counters.
[[nodiscard]] StatsDelta diff_stats(const CorpusStats& before, const CorpusStats& after);

/// Signed two-decimal percentage: "+86.35%", "-4.10%", "0.00%"; "n/a" when undefined.
[[nodiscard]] std::string format_percent(const std::optional<double>& percent);

[[nodiscard]] std::string to_json(const CorpusStats& stats);
[[nodiscard]] CorpusStats parse_corpus_stats(std::string_view json_text);
[[nodiscard]] std::string to_json(const StatsDelta& delta);

}  // namespace stepfill

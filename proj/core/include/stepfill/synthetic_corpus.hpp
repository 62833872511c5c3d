#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stepfill/records.hpp"
#include "stepfill/step_decomposer.hpp"

namespace stepfill {

enum class DropKind { EveryOther, RandomK };

/// Which fine steps the coarse chain omits. EveryOther drops compute steps
/// 1, 3, 5, ...; RandomK drops k non-adjacent compute steps (fewer when the
/// chain is too short). The final answer step is never dropped.
struct DropPattern {
  DropKind kind = DropKind::EveryOther;
  std::size_t k = 1;

  /// "every-other" or "random-k:K".
  [[nodiscard]] static DropPattern parse(std::string_view text);
  [[nodiscard]] std::string to_string() const;
};

struct CorpusSpec {
  std::size_t count = 100;
  std::size_t ops_min = 2;
  std::size_t ops_max = 4;
  std::int64_t operand_min = 1;
  std::int64_t operand_max = 20;
  /// Any of '+', '-', '*'.
  std::string operators = "+-*";
  DropPattern drop;
  std::uint64_t seed = 0;
  /// Problems are redrawn until every dropped step scores below this against
  /// the fine step that follows it, so the gap survives a gate at this eta.
  double separation_eta = 0.8;

  /// Throws Error{SpecError} for an empty or unknown operator set, ops_min < 2,
  /// inverted ranges, or bounds that could overflow 64-bit arithmetic.
  void validate() const;
};

struct SyntheticProblem {
  std::string id;
  /// "Compute the value of ((2 + 3) * 4) - 5."
  std::string question;
  std::int64_t answer = 0;
  /// One "Compute a op b = c." step per operation, then "The answer is v.".
  StepChain fine_chain;
  StepChain coarse_chain;
  std::vector<std::size_t> dropped_indices;
};

/// A left-nested integer expression: operands[0] op[0] operands[1] op[1] ...
struct SyntheticExpression {
  std::vector<std::int64_t> operands;
  std::vector<char> operators;
};

/// Deterministic in spec.seed; problem i depends only on (seed, i).
[[nodiscard]] std::vector<SyntheticProblem> generate(const CorpusSpec& spec);

[[nodiscard]] std::int64_t evaluate(const SyntheticExpression& expr);
[[nodiscard]] std::string render_question(const SyntheticExpression& expr);
[[nodiscard]] StepChain fine_chain_for(const SyntheticExpression& expr);

/// Parses a question produced by render_question. Throws Error{UnparsableQuestion}.
[[nodiscard]] SyntheticExpression parse_question(std::string_view question);

/// Ground-truth gap filler. Aligns the prefix with the fine chain left to
/// right, then returns the first fine step missing between the last aligned
/// prefix step and the next suffix step; when nothing is missing it returns
/// the first suffix step verbatim. Steps it cannot align are skipped.
/// Throws Error{UnparsableQuestion} for questions it did not generate.
[[nodiscard]] std::string oracle_fill(std::string_view question, std::span<const std::string> prefix_steps,
                                      std::span<const std::string> suffix_steps);

[[nodiscard]] ChainRecord coarse_record(const SyntheticProblem& problem);
[[nodiscard]] ChainRecord fine_record(const SyntheticProblem& problem);
/// `{"id", "dropped_indices": [...]}`
[[nodiscard]] std::string dropped_jsonl(const SyntheticProblem& problem);

}  // namespace stepfill

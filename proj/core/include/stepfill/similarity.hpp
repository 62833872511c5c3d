#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stepfill {

/// Ratio in [0, 1]; 1 exactly when the whitespace-normalized inputs are identical.
struct SimilarityScore {
  double value = 0.0;

  friend auto operator<=>(const SimilarityScore&, const SimilarityScore&) = default;
};

struct MatchingBlock {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t size = 0;

  friend bool operator==(const MatchingBlock&, const MatchingBlock&) = default;
};

/// Ratcliff/Obershelp matching blocks over two code-point sequences: the
/// longest common block (leftmost in `a`, then leftmost in `b`), then the same
/// recursively on the pieces to its left and right. Blocks come back sorted by
/// position. No junk heuristics are applied.
[[nodiscard]] std::vector<MatchingBlock> matching_blocks(std::u32string_view a, std::u32string_view b);

/// 2*M / (|a'| + |b'|) over code points of the whitespace-normalized inputs,
/// M being the total size of the matching blocks. similarity("", "") == 1.
[[nodiscard]] SimilarityScore similarity(std::string_view a, std::string_view b);

struct GateConfig {
  double eta = 0.8;

  /// Throws Error{InvalidConfig} unless 0 < eta <= 1.
  void validate() const;
};

enum class GateDecision { Valid, Invalid };

struct GateOutcome {
  GateDecision decision = GateDecision::Invalid;
  SimilarityScore score;
};

/// Invalid when the trimmed candidate is empty or scores >= eta against the
/// step it would precede.
[[nodiscard]] GateOutcome gate(std::string_view candidate, std::string_view next_step, const GateConfig& config);

}  // namespace stepfill

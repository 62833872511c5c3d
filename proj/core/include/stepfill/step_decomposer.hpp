#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "stepfill/text.hpp"

namespace stepfill {

struct Step {
  std::size_t index = 0;
  std::string text;

  friend bool operator==(const Step&, const Step&) = default;
};

/// Ordered reasoning steps of one solution. Indices are always 0..n-1.
struct StepChain {
  std::vector<Step> steps;
  std::string separator{kDefaultSeparator};

  /// Builds a chain from raw step texts. Throws Error{MalformedRecord} when a
  /// text is empty or carries leading/trailing whitespace.
  static StepChain from_texts(std::vector<std::string> texts,
                              std::string separator = std::string(kDefaultSeparator));

  [[nodiscard]] std::size_t size() const noexcept { return steps.size(); }
  [[nodiscard]] bool empty() const noexcept { return steps.empty(); }
  [[nodiscard]] std::vector<std::string> texts() const;

  friend bool operator==(const StepChain&, const StepChain&) = default;
};

struct DecomposeConfig {
  /// Fragments shorter than this many code points merge into a neighbour.
  std::size_t min_step_chars = 10;
  /// A run of whitespace containing two or more newlines ends a step.
  bool split_on_blank_lines = true;
  std::string separator{kDefaultSeparator};
};

/// Splits free-form solution text into steps.
///
/// A step starts at each explicit marker ("Step N:" / "Step N." anywhere after
/// whitespace; First/Next/Then/Finally/Therefore at the start of a sentence or
/// line; list items at the start of a line), at sentence ends (`.`, `!`, `?`
/// followed by whitespace and an uppercase letter), and at blank lines. Math
/// content in `$..$`, `$$..$$`, `\(..\)`, `\[..\]` and `\begin{E}..\end{E}` is
/// never split. Boundaries always fall on whitespace, so the joined chain
/// equals the source modulo whitespace.
///
/// Throws Error{EmptySolution} for blank or content-free input and
/// Error{UnbalancedMath} when a math delimiter is left open or closed twice.
[[nodiscard]] StepChain decompose(std::string_view solution, const DecomposeConfig& config = {});

/// Concatenates step texts with the chain's separator.
[[nodiscard]] std::string join(const StepChain& chain);

}  // namespace stepfill

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

struct SamplerConfig {
  std::size_t rounds = 3;
  std::uint64_t seed = 0;

  /// Throws Error{InvalidConfig} when rounds == 0.
  void validate() const;
};

/// One held-out-step training example in PSM order.
struct FimSample {
  std::string source_id;
  std::size_t round = 0;
  std::size_t middle_index = 0;
  std::string prefix;
  std::string middle;
  std::string suffix;
  std::string psm_text;
  /// Byte offsets of the loss region; psm_text.substr(start, end - start) == middle.
  std::size_t loss_char_start = 0;
  std::size_t loss_char_end = 0;

  friend bool operator==(const FimSample&, const FimSample&) = default;
};

struct PsmLayout {
  std::string text;
  std::size_t loss_start = 0;
  std::size_t loss_end = 0;
};

/// The three regions between the special tokens. `head` is question + "\n" + prefix.
struct PsmSegments {
  std::string head;
  std::string suffix;
  std::string middle;

  friend bool operator==(const PsmSegments&, const PsmSegments&) = default;
};

/// `<|fim_prefix|>` question "\n" prefix `<|fim_suffix|>` suffix `<|fim_middle|>` middle.
///
/// No whitespace is added around the tokens besides the newline after the
/// question. Throws Error{SpecialTokenCollision} if any input contains a
/// special-token literal.
[[nodiscard]] PsmLayout format_psm(std::string_view question, std::string_view prefix,
                                   std::string_view suffix, std::string_view middle);
[[nodiscard]] PsmLayout format_psm(const FimSample& sample, std::string_view question);

/// Inference prompt for a gap: PSM text with an empty middle, ending at `<|fim_middle|>`.
[[nodiscard]] std::string psm_prompt(std::string_view question, std::span<const std::string> prefix_steps,
                                     std::span<const std::string> suffix_steps,
                                     std::string_view separator = kDefaultSeparator);

/// Splits PSM text at its three tokens. Throws Error{MalformedPsm} when a
/// token is missing, repeated, or out of order.
[[nodiscard]] PsmSegments parse_psm(std::string_view psm_text);

/// Joins the non-empty groups with the separator; the inverse of the split done by sampling.
[[nodiscard]] std::string reassemble(std::string_view prefix, std::string_view middle, std::string_view suffix,
                                     std::string_view separator = kDefaultSeparator);

/// Draws config.rounds samples from one chain. The middle index of round r is
/// uniform over 0..n-1 from a stream keyed by (seed, source_id, r), so the
/// result does not depend on which other records are processed or in what order.
[[nodiscard]] std::vector<FimSample> sample_fim(const StepChain& chain, std::string_view source_id,
                                                std::string_view question, const SamplerConfig& config);

/// Samples every record in input order, rounds ascending. Throws
/// Error{DuplicateId} if two records share an id.
[[nodiscard]] std::vector<FimSample> build_fim_corpus(std::span<const ChainRecord> records,
                                                      const SamplerConfig& config);

[[nodiscard]] std::string to_jsonl(const FimSample& sample);
[[nodiscard]] FimSample parse_fim_sample(std::string_view line);

}  // namespace stepfill

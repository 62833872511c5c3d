#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stepfill {

enum class Errc {
  EmptySolution,
  UnbalancedMath,
  SpecialTokenCollision,
  MalformedPsm,
  InvalidConfig,
  DuplicateId,
  MalformedRecord,
  Timeout,
  TransportError,
  FixtureMiss,
  UnparsableQuestion,
  SpecError,
  EmptyCorpus,
  TokenizerMismatch,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Library-wide exception. Every failure the toolkit reports carries one of
/// the Errc codes so callers can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Errors a backend raises for one fill call; the engine records these per gap.
[[nodiscard]] bool is_backend_error(Errc code) noexcept;

}  // namespace stepfill

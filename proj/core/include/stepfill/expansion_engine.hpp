#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stepfill/model_backends.hpp"
#include "stepfill/records.hpp"
#include "stepfill/similarity.hpp"
#include "stepfill/step_decomposer.hpp"

namespace stepfill {

class ThreadPool;

enum class GapDecision { Valid, Invalid, BackendError, Malformed };

[[nodiscard]] std::string_view to_string(GapDecision decision) noexcept;

/// Outcome for one gap. gap_index is 1-based: the candidate would go between
/// step gap_index-1 and step gap_index of the chain being expanded, so gap 1
/// is the leading gap before the first step.
struct GapProposal {
  std::size_t gap_index = 0;
  std::string candidate;
  SimilarityScore similarity_to_next;
  GapDecision decision = GapDecision::Invalid;
  std::size_t attempts = 0;
  double latency_ms = 0.0;
  /// Errc name and message of the last failure, BackendError only.
  std::string error_code;
  std::string error;
};

struct ExpansionConfig {
  double eta = 0.8;
  std::size_t iterations = 1;
  bool include_leading_gap = false;
  /// Upper bound on concurrent fill calls across all records.
  std::size_t max_in_flight = 4;
  /// Engine-level retries for Timeout / TransportError (deterministic
  /// failures such as FixtureMiss are not retried).
  std::size_t retry_limit = 0;
  /// Forwarded for stochastic backends; the built-in ones ignore it.
  std::uint64_t seed = 0;

  /// Throws Error{InvalidConfig}.
  void validate() const;
};

/// One record, one round.
struct ExpansionReport {
  std::size_t round = 0;
  std::size_t input_steps = 0;
  std::size_t output_steps = 0;
  std::size_t attempted = 0;
  std::size_t inserted = 0;
  std::size_t invalid = 0;
  std::size_t errored = 0;
  std::size_t malformed = 0;
  std::vector<GapProposal> gaps;
};

struct ExpansionResult {
  StepChain chain;
  ExpansionReport report;
};

struct IterativeResult {
  StepChain chain;
  std::vector<ExpansionReport> rounds;
};

/// A completed fill call, reported in deterministic (round, gap) order.
struct Exchange {
  FimRequest request;
  std::string raw_response;
};

/// Cuts a raw completion at the first FIM special-token literal and trims it.
[[nodiscard]] std::string clean_candidate(std::string_view raw);

/// A cleaned candidate is malformed when it still carries a sentinel
/// fragment (`<|fim`, e.g. a cut-off or unknown FIM token) or invalid UTF-8.
[[nodiscard]] bool is_malformed_candidate(std::string_view cleaned);

/// Builds the request for gap `gap_index` (1-based): prefix = steps before
/// the gap, suffix = every step from the gap to the end.
[[nodiscard]] FimRequest gap_request(std::string_view question, const StepChain& chain, std::size_t gap_index);

/// One expansion round: one fill per gap, gate each candidate against the step
/// it would precede, insert the valid ones. Gap calls run on `pool` when given;
/// the result never depends on completion order. Per-gap backend failures are
/// recorded in the report, never thrown.
[[nodiscard]] ExpansionResult expand_chain(std::string_view question, const StepChain& chain, FimBackend& backend,
                                           const ExpansionConfig& config, ThreadPool* pool = nullptr,
                                           std::vector<Exchange>* exchanges = nullptr);

/// config.iterations rounds, each consuming the previous round's output.
[[nodiscard]] IterativeResult expand_iteratively(std::string_view question, const StepChain& chain,
                                                 FimBackend& backend, const ExpansionConfig& config,
                                                 ThreadPool* pool = nullptr,
                                                 std::vector<Exchange>* exchanges = nullptr);

struct RecordOutcome {
  std::size_t index = 0;
  /// The expanded record, or the input unchanged when `error` is set.
  ChainRecord record;
  std::size_t input_steps = 0;
  std::vector<ExpansionReport> rounds;
  std::string error;
  std::vector<Exchange> exchanges;
};

struct AggregateReport {
  std::size_t records = 0;
  std::size_t failed_records = 0;
  std::size_t attempted = 0;
  std::size_t inserted = 0;
  std::size_t invalid = 0;
  std::size_t errored = 0;
  std::size_t malformed = 0;
  std::size_t input_steps = 0;
  std::size_t output_steps = 0;
  /// Gaps whose failure was Timeout or TransportError.
  std::size_t transport_failures = 0;
};

/// Expands every record independently. `on_record` is called once per record,
/// serialized and in input order, as soon as all earlier records are done.
AggregateReport expand_dataset(std::span<const ChainRecord> records, FimBackend& backend,
                               const ExpansionConfig& config,
                               const std::function<void(RecordOutcome&)>& on_record,
                               bool collect_exchanges = false);

/// One report line per record: id, step counts, per-round reports with their
/// gaps. Latencies are left out unless include_timing is set, which keeps
/// the file byte-stable across reruns.
[[nodiscard]] std::string report_jsonl(const RecordOutcome& outcome, bool include_timing);
[[nodiscard]] std::string to_json(const AggregateReport& report);

}  // namespace stepfill

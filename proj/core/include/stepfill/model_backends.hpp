#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace stepfill {

/// One gap-filling call: the question, the steps before the gap and the full
/// tail after it.
struct FimRequest {
  std::string question;
  std::vector<std::string> prefix_steps;
  std::vector<std::string> suffix_steps;
  std::string request_id;

  [[nodiscard]] static FimRequest make(std::string question, std::vector<std::string> prefix_steps,
                                       std::vector<std::string> suffix_steps);
};

/// Lower-case hex SHA-256 of the canonical request encoding:
///
///     "stepfill-fim-request/v1\n"
///     then for each group in (question), (prefix steps), (suffix steps):
///       "<count>\n" followed by "<byte length>:<bytes>\n" per string
///
/// Counts and lengths are ASCII decimal; strings are raw UTF-8 bytes.
[[nodiscard]] std::string compute_request_id(std::string_view question, std::span<const std::string> prefix_steps,
                                             std::span<const std::string> suffix_steps);

enum class BackendKind { Http, Oracle, Replay };

[[nodiscard]] std::string_view to_string(BackendKind kind) noexcept;
/// Accepts "http", "oracle", "replay"; throws Error{InvalidConfig} otherwise.
[[nodiscard]] BackendKind parse_backend_kind(std::string_view name);

struct BackendConfig {
  BackendKind kind = BackendKind::Oracle;
  std::string endpoint_url;
  /// Name of the environment variable holding the bearer token; empty means no auth.
  std::string auth_token_env;
  int timeout_ms = 30000;
  int retry_limit = 3;
  int backoff_ms = 200;
  std::filesystem::path fixture_path;
  /// Completions longer than this many bytes are cut (at a UTF-8 boundary).
  std::size_t max_new_chars = 2048;
  /// Sent as `max_tokens` on the wire.
  int max_tokens = 256;
  double temperature = 0.0;
  /// Upper bound on pooled HTTP connections.
  std::size_t max_connections = 8;

  /// Throws Error{InvalidConfig}: http needs endpoint_url, replay needs fixture_path.
  void validate() const;
};

/// A FIM model. fill() must be safe to call from several threads at once and
/// returns the raw completion; cleanup is the caller's job. Failures throw
/// Error with Timeout, TransportError, FixtureMiss or UnparsableQuestion.
class FimBackend {
 public:
  virtual ~FimBackend() = default;
  [[nodiscard]] virtual std::string fill(const FimRequest& request) = 0;
  [[nodiscard]] virtual std::string_view name() const noexcept = 0;
};

/// Answers from the synthetic corpus ground truth (see oracle_fill).
class OracleBackend final : public FimBackend {
 public:
  [[nodiscard]] std::string fill(const FimRequest& request) override;
  [[nodiscard]] std::string_view name() const noexcept override { return "oracle"; }
};

/// Looks responses up by request_id. The first entry wins when a fixture
/// file repeats an id.
class ReplayBackend final : public FimBackend {
 public:
  explicit ReplayBackend(const std::filesystem::path& fixture_path);
  explicit ReplayBackend(std::unordered_map<std::string, std::string> responses);

  [[nodiscard]] std::string fill(const FimRequest& request) override;
  [[nodiscard]] std::string_view name() const noexcept override { return "replay"; }
  [[nodiscard]] std::size_t size() const noexcept { return responses_.size(); }

 private:
  std::unordered_map<std::string, std::string> responses_;
};

/// Completion-style HTTP client.
///
/// Wire format: `POST endpoint_url` with body
/// `{"prompt": <psm prompt>, "stop": [<|fim_prefix|>, <|fim_suffix|>, <|fim_middle|>],
///   "max_tokens": N, "temperature": T}`.
/// The completion is read from `choices[0].text`, or a top-level `text`,
/// `completion` or `content` string. Transport failures, 408, 429 and 5xx
/// are retried up to retry_limit times with exponential backoff; any other
/// status fails at once. A 2xx response is never retried.
class HttpBackend final : public FimBackend {
 public:
  explicit HttpBackend(BackendConfig config);
  ~HttpBackend() override;
  HttpBackend(const HttpBackend&) = delete;
  HttpBackend& operator=(const HttpBackend&) = delete;

  [[nodiscard]] std::string fill(const FimRequest& request) override;
  [[nodiscard]] std::string_view name() const noexcept override { return "http"; }

  /// Total HTTP requests sent, retries included.
  [[nodiscard]] std::size_t requests_sent() const noexcept { return requests_sent_.load(); }

  /// JSON request body for a prompt; exposed for tests and fixtures.
  [[nodiscard]] std::string request_body(std::string_view prompt) const;

 private:
  struct Pool;

  BackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::string bearer_;
  std::unique_ptr<Pool> pool_;
  std::atomic<std::size_t> requests_sent_{0};
};

[[nodiscard]] std::unique_ptr<FimBackend> make_backend(const BackendConfig& config);

/// Extracts the completion text from a response body, or throws Error{TransportError}.
[[nodiscard]] std::string parse_completion_body(std::string_view body);

/// Appends `{"request_id", "response"}` lines, keeping only the first
/// occurrence of each id. Every entry is flushed as it is written, so a file
/// cut short by a crash is still a valid fixture for what it holds.
class FixtureWriter {
 public:
  /// With append set, existing entries are loaded and kept.
  explicit FixtureWriter(const std::filesystem::path& path, bool append = false);
  ~FixtureWriter();
  FixtureWriter(const FixtureWriter&) = delete;
  FixtureWriter& operator=(const FixtureWriter&) = delete;

  /// Returns false (and writes nothing) if the id was already recorded.
  bool record(std::string_view request_id, std::string_view response);
  [[nodiscard]] std::size_t size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RecordSummary {
  std::size_t written = 0;
  std::size_t duplicates = 0;
  /// (request_id, message) for requests the live backend failed on.
  std::vector<std::pair<std::string, std::string>> errors;
};

/// Replays `requests` in order against `live` and records the responses.
/// Per-request failures are collected, not thrown; I/O failures throw.
RecordSummary record_fixtures(std::span<const FimRequest> requests, FimBackend& live,
                              const std::filesystem::path& fixture_path);

}  // namespace stepfill

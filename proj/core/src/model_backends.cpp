#include "stepfill/model_backends.hpp"

#include <array>
#include <fstream>
#include <mutex>
#include <unordered_set>

#include <json.hpp>
#include <openssl/evp.h>

#include "json_util.hpp"
#include "stepfill/error.hpp"
#include "stepfill/records.hpp"
#include "stepfill/synthetic_corpus.hpp"

namespace stepfill {

namespace {

void append_group(std::string& out, std::span<const std::string> group) {
  out.append(std::to_string(group.size())).push_back('\n');
  for (const auto& s : group) {
    out.append(std::to_string(s.size())).push_back(':');
    out.append(s).push_back('\n');
  }
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::InvalidConfig, "SHA-256 unavailable");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

}  // namespace

std::string compute_request_id(std::string_view question, std::span<const std::string> prefix_steps,
                               std::span<const std::string> suffix_steps) {
  std::string canonical = "stepfill-fim-request/v1\n";
  const std::string q(question);
  append_group(canonical, std::span<const std::string>(&q, 1));
  append_group(canonical, prefix_steps);
  append_group(canonical, suffix_steps);
  return sha256_hex(canonical);
}

FimRequest FimRequest::make(std::string question, std::vector<std::string> prefix_steps,
                            std::vector<std::string> suffix_steps) {
  FimRequest r{std::move(question), std::move(prefix_steps), std::move(suffix_steps), {}};
  r.request_id = compute_request_id(r.question, r.prefix_steps, r.suffix_steps);
  return r;
}

std::string_view to_string(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::Http: return "http";
    case BackendKind::Oracle: return "oracle";
    case BackendKind::Replay: return "replay";
  }
  return "unknown";
}

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "http") return BackendKind::Http;
  if (name == "oracle") return BackendKind::Oracle;
  if (name == "replay") return BackendKind::Replay;
  throw Error(Errc::InvalidConfig, "unknown backend '" + std::string(name) + "'");
}

void BackendConfig::validate() const {
  if (kind == BackendKind::Http && endpoint_url.empty()) {
    throw Error(Errc::InvalidConfig, "http backend requires endpoint_url");
  }
  if (kind == BackendKind::Replay && fixture_path.empty()) {
    throw Error(Errc::InvalidConfig, "replay backend requires fixture_path");
  }
  if (timeout_ms <= 0 || retry_limit < 0 || backoff_ms < 0 || max_tokens <= 0 || max_connections == 0 ||
      max_new_chars == 0) {
    throw Error(Errc::InvalidConfig, "backend limits must be positive (retry_limit, backoff_ms >= 0)");
  }
}

std::string OracleBackend::fill(const FimRequest& request) {
  return oracle_fill(request.question, request.prefix_steps, request.suffix_steps);
}

ReplayBackend::ReplayBackend(std::unordered_map<std::string, std::string> responses)
    : responses_(std::move(responses)) {}

ReplayBackend::ReplayBackend(const std::filesystem::path& fixture_path) {
  for_each_line(fixture_path, [&](std::string_view line, std::size_t number) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("request_id") || !j.contains("response") ||
        !j["request_id"].is_string() || !j["response"].is_string()) {
      throw Error(Errc::MalformedRecord,
                  fixture_path.string() + ":" + std::to_string(number) + ": expected {request_id, response}");
    }
    responses_.try_emplace(j["request_id"].get<std::string>(), j["response"].get<std::string>());
  });
}

std::string ReplayBackend::fill(const FimRequest& request) {
  const auto it = responses_.find(request.request_id);
  if (it == responses_.end()) throw Error(Errc::FixtureMiss, "no fixture for request " + request.request_id);
  return it->second;
}

std::unique_ptr<FimBackend> make_backend(const BackendConfig& config) {
  config.validate();
  switch (config.kind) {
    case BackendKind::Oracle: return std::make_unique<OracleBackend>();
    case BackendKind::Replay: return std::make_unique<ReplayBackend>(config.fixture_path);
    case BackendKind::Http: return std::make_unique<HttpBackend>(config);
  }
  throw Error(Errc::InvalidConfig, "unknown backend kind");
}

std::string parse_completion_body(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::TransportError, "response body is not a JSON object");
  if (const auto it = j.find("choices"); it != j.end() && it->is_array() && !it->empty()) {
    const auto& first = (*it)[0];
    if (first.is_object() && first.contains("text") && first["text"].is_string()) {
      return first["text"].get<std::string>();
    }
  }
  for (const char* key : {"text", "completion", "content"}) {
    if (const auto it = j.find(key); it != j.end() && it->is_string()) return it->get<std::string>();
  }
  throw Error(Errc::TransportError, "response carries no completion text");
}

struct FixtureWriter::Impl {
  std::mutex mu;
  std::ofstream out;
  std::string path;
  std::unordered_set<std::string> seen;
};

FixtureWriter::FixtureWriter(const std::filesystem::path& path, bool append) : impl_(std::make_unique<Impl>()) {
  impl_->path = path.string();
  if (append && std::filesystem::exists(path)) {
    for_each_line(path, [&](std::string_view line, std::size_t) {
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_object() && j.contains("request_id") && j["request_id"].is_string()) {
        impl_->seen.insert(j["request_id"].get<std::string>());
      }
    });
  }
  impl_->out.open(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!impl_->out) throw Error(Errc::Io, "cannot open fixture file " + impl_->path);
}

FixtureWriter::~FixtureWriter() = default;

bool FixtureWriter::record(std::string_view request_id, std::string_view response) {
  std::lock_guard lock(impl_->mu);
  if (!impl_->seen.emplace(request_id).second) return false;
  nlohmann::json j;
  j["request_id"] = request_id;
  j["response"] = response;
  impl_->out << detail::dump(j) << '\n';
  impl_->out.flush();
  if (!impl_->out) throw Error(Errc::Io, "write failure on " + impl_->path);
  return true;
}

std::size_t FixtureWriter::size() const {
  std::lock_guard lock(impl_->mu);
  return impl_->seen.size();
}

RecordSummary record_fixtures(std::span<const FimRequest> requests, FimBackend& live,
                              const std::filesystem::path& fixture_path) {
  RecordSummary summary;
  FixtureWriter writer(fixture_path);
  for (const auto& request : requests) {
    std::string response;
    try {
      response = live.fill(request);
    } catch (const Error& e) {
      if (!is_backend_error(e.code())) throw;
      summary.errors.emplace_back(request.request_id, e.what());
      continue;
    }
    if (writer.record(request.request_id, response)) {
      ++summary.written;
    } else {
      ++summary.duplicates;
    }
  }
  return summary;
}

}  // namespace stepfill

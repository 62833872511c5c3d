#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <regex>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "json_util.hpp"
#include "stepfill/error.hpp"
#include "stepfill/fim_builder.hpp"
#include "stepfill/model_backends.hpp"
#include "stepfill/text.hpp"

namespace stepfill {

namespace {

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

std::string cut_utf8(std::string text, std::size_t max_bytes) {
  if (text.size() <= max_bytes) return text;
  std::size_t end = max_bytes;
  while (end > 0 && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) --end;
  text.resize(end);
  return text;
}

}  // namespace

// Idle connections are reused; at most max_connections exist at once.
struct HttpBackend::Pool {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::unique_ptr<httplib::Client>> idle;
  std::size_t created = 0;
};

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)), pool_(std::make_unique<Pool>()) {
  config_.kind = BackendKind::Http;
  config_.validate();
  static const std::regex kUrl(R"(^(https?://[^/?#]+)([^#]*)$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint_url, m, kUrl)) {
    throw Error(Errc::InvalidConfig, "endpoint_url must look like http(s)://host[:port]/path");
  }
  scheme_host_port_ = m[1].str();
  path_ = m[2].str().empty() ? "/" : m[2].str();
  if (!config_.auth_token_env.empty()) {
    const char* token = std::getenv(config_.auth_token_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw Error(Errc::InvalidConfig, "auth token variable " + config_.auth_token_env + " is unset");
    }
    bearer_ = token;
  }
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::request_body(std::string_view prompt) const {
  nlohmann::json body;
  body["prompt"] = prompt;
  body["stop"] = nlohmann::json::array({kFimPrefix, kFimSuffix, kFimMiddle});
  body["max_tokens"] = config_.max_tokens;
  body["temperature"] = config_.temperature;
  return detail::dump(body);
}

std::string HttpBackend::fill(const FimRequest& request) {
  const std::string body = request_body(psm_prompt(request.question, request.prefix_steps, request.suffix_steps));

  std::unique_ptr<httplib::Client> client;
  {
    std::unique_lock lock(pool_->mu);
    pool_->cv.wait(lock, [&] { return !pool_->idle.empty() || pool_->created < config_.max_connections; });
    if (!pool_->idle.empty()) {
      client = std::move(pool_->idle.back());
      pool_->idle.pop_back();
    } else {
      ++pool_->created;
    }
  }
  if (!client) {
    client = std::make_unique<httplib::Client>(scheme_host_port_);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    client->set_connection_timeout(timeout);
    client->set_read_timeout(timeout);
    client->set_write_timeout(timeout);
    client->set_keep_alive(true);
    if (!bearer_.empty()) client->set_bearer_token_auth(bearer_);
  }
  struct Return {
    Pool& pool;
    std::unique_ptr<httplib::Client>& client;
    ~Return() {
      std::lock_guard lock(pool.mu);
      pool.idle.push_back(std::move(client));
      pool.cv.notify_one();
    }
  } give_back{*pool_, client};

  std::string last_error;
  Errc last_code = Errc::TransportError;
  for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
    if (attempt > 0 && config_.backoff_ms > 0) {
      const auto delay = std::min<long long>(static_cast<long long>(config_.backoff_ms) << std::min(attempt - 1, 16),
                                             30'000);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    ++requests_sent_;
    const auto sent_at = std::chrono::steady_clock::now();
    auto res = client->Post(path_, body, "application/json");
    if (!res) {
      const auto err = res.error();
      // httplib reports an expired read timeout as a plain read error.
      const bool expired = std::chrono::steady_clock::now() - sent_at >= std::chrono::milliseconds(config_.timeout_ms);
      last_code = err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && expired)
                      ? Errc::Timeout
                      : Errc::TransportError;
      last_error = "request failed: " + httplib::to_string(err);
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      return cut_utf8(parse_completion_body(res->body), config_.max_new_chars);
    }
    last_code = Errc::TransportError;
    last_error = "HTTP " + std::to_string(res->status);
    if (!retryable_status(res->status)) break;
  }
  throw Error(last_code, last_error + " (" + config_.endpoint_url + ")");
}

}  // namespace stepfill

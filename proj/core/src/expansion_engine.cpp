#include "stepfill/expansion_engine.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <json.hpp>

#include "json_util.hpp"
#include "stepfill/error.hpp"
#include "stepfill/text.hpp"
#include "stepfill/thread_pool.hpp"

namespace stepfill {

std::string_view to_string(GapDecision decision) noexcept {
  switch (decision) {
    case GapDecision::Valid: return "valid";
    case GapDecision::Invalid: return "invalid";
    case GapDecision::BackendError: return "backend_error";
    case GapDecision::Malformed: return "malformed";
  }
  return "unknown";
}

void ExpansionConfig::validate() const {
  GateConfig{eta}.validate();
  if (iterations == 0) throw Error(Errc::InvalidConfig, "iterations must be >= 1");
  if (max_in_flight == 0) throw Error(Errc::InvalidConfig, "max_in_flight must be >= 1");
}

std::string clean_candidate(std::string_view raw) {
  const auto cut = find_first_special_token(raw);
  return std::string(trim(raw.substr(0, cut)));
}

bool is_malformed_candidate(std::string_view cleaned) {
  return cleaned.find("<|fim") != std::string_view::npos || !is_valid_utf8(cleaned);
}

FimRequest gap_request(std::string_view question, const StepChain& chain, std::size_t gap_index) {
  if (gap_index == 0 || gap_index > chain.size()) {
    throw Error(Errc::InvalidConfig, "gap index " + std::to_string(gap_index) + " out of range");
  }
  std::vector<std::string> prefix;
  std::vector<std::string> suffix;
  for (const auto& step : chain.steps) {
    (step.index + 1 < gap_index ? prefix : suffix).push_back(step.text);
  }
  return FimRequest::make(std::string(question), std::move(prefix), std::move(suffix));
}

namespace {

struct GapWork {
  GapProposal proposal;
  std::optional<Exchange> exchange;
};

bool retryable(Errc code) { return code == Errc::Timeout || code == Errc::TransportError; }

GapWork run_gap(std::string_view question, const StepChain& chain, std::size_t gap_index, FimBackend& backend,
                const ExpansionConfig& config, bool keep_exchange) {
  GapWork work;
  auto& p = work.proposal;
  p.gap_index = gap_index;
  auto request = gap_request(question, chain, gap_index);

  const auto started = std::chrono::steady_clock::now();
  std::optional<std::string> raw;
  for (std::size_t attempt = 0; attempt <= config.retry_limit; ++attempt) {
    ++p.attempts;
    try {
      raw = backend.fill(request);
      break;
    } catch (const Error& e) {
      if (!is_backend_error(e.code())) throw;
      p.error_code = std::string(to_string(e.code()));
      p.error = e.what();
      if (!retryable(e.code())) break;
    }
  }
  p.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

  if (!raw) {
    p.decision = GapDecision::BackendError;
    return work;
  }
  p.error_code.clear();
  p.error.clear();
  p.candidate = clean_candidate(*raw);
  const auto& next_step = chain.steps[gap_index - 1].text;
  if (!p.candidate.empty() && is_malformed_candidate(p.candidate)) {
    p.decision = GapDecision::Malformed;
  } else {
    const auto outcome = gate(p.candidate, next_step, GateConfig{config.eta});
    p.decision = outcome.decision == GateDecision::Valid ? GapDecision::Valid : GapDecision::Invalid;
    p.similarity_to_next = outcome.score;
  }
  if (keep_exchange) work.exchange = Exchange{std::move(request), std::move(*raw)};
  return work;
}

}  // namespace

ExpansionResult expand_chain(std::string_view question, const StepChain& chain, FimBackend& backend,
                             const ExpansionConfig& config, ThreadPool* pool, std::vector<Exchange>* exchanges) {
  config.validate();
  if (chain.empty()) throw Error(Errc::MalformedRecord, "cannot expand an empty chain");

  const std::size_t first_gap = config.include_leading_gap ? 1 : 2;
  const std::size_t n = chain.size();
  std::vector<GapWork> work;
  if (first_gap <= n) work.reserve(n - first_gap + 1);

  if (pool != nullptr && pool->size() > 1 && n >= first_gap + 1) {
    std::vector<std::future<GapWork>> pending;
    for (std::size_t g = first_gap; g <= n; ++g) {
      pending.push_back(pool->submit(
          [&, g] { return run_gap(question, chain, g, backend, config, exchanges != nullptr); }));
    }
    // Drain every future before rethrowing so no task outlives this frame.
    std::exception_ptr failure;
    for (auto& f : pending) {
      try {
        work.push_back(f.get());
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t g = first_gap; g <= n; ++g) {
      work.push_back(run_gap(question, chain, g, backend, config, exchanges != nullptr));
    }
  }

  ExpansionResult result;
  auto& report = result.report;
  report.input_steps = n;
  std::vector<const GapProposal*> before(n + 1, nullptr);
  for (auto& w : work) {
    auto& p = w.proposal;
    ++report.attempted;
    switch (p.decision) {
      case GapDecision::Valid: ++report.inserted; break;
      case GapDecision::Invalid: ++report.invalid; break;
      case GapDecision::BackendError: ++report.errored; break;
      case GapDecision::Malformed: ++report.malformed; break;
    }
    if (exchanges != nullptr && w.exchange) exchanges->push_back(std::move(*w.exchange));
    report.gaps.push_back(std::move(p));
  }
  for (const auto& p : report.gaps) before[p.gap_index] = &p;

  std::vector<std::string> texts;
  texts.reserve(n + report.inserted);
  for (const auto& step : chain.steps) {
    const auto* p = before[step.index + 1];
    if (p != nullptr && p->decision == GapDecision::Valid) texts.push_back(p->candidate);
    texts.push_back(step.text);
  }
  result.chain = StepChain::from_texts(std::move(texts), chain.separator);
  report.output_steps = result.chain.size();
  return result;
}

IterativeResult expand_iteratively(std::string_view question, const StepChain& chain, FimBackend& backend,
                                   const ExpansionConfig& config, ThreadPool* pool, std::vector<Exchange>* exchanges) {
  config.validate();
  IterativeResult result;
  result.chain = chain;
  for (std::size_t round = 0; round < config.iterations; ++round) {
    auto step = expand_chain(question, result.chain, backend, config, pool, exchanges);
    step.report.round = round;
    result.chain = std::move(step.chain);
    result.rounds.push_back(std::move(step.report));
  }
  return result;
}

namespace {

void accumulate(AggregateReport& agg, const RecordOutcome& outcome) {
  ++agg.records;
  if (!outcome.error.empty()) ++agg.failed_records;
  agg.input_steps += outcome.input_steps;
  agg.output_steps += outcome.record.chain.size();
  for (const auto& r : outcome.rounds) {
    agg.attempted += r.attempted;
    agg.inserted += r.inserted;
    agg.invalid += r.invalid;
    agg.errored += r.errored;
    agg.malformed += r.malformed;
    for (const auto& g : r.gaps) {
      if (g.error_code == "Timeout" || g.error_code == "TransportError") ++agg.transport_failures;
    }
  }
}

RecordOutcome expand_record(std::size_t index, const ChainRecord& record, FimBackend& backend,
                            const ExpansionConfig& config, ThreadPool* pool, bool collect) {
  RecordOutcome outcome;
  outcome.index = index;
  outcome.input_steps = record.chain.size();
  try {
    auto result = expand_iteratively(record.question, record.chain, backend, config, pool,
                                     collect ? &outcome.exchanges : nullptr);
    outcome.record = ChainRecord{record.id, record.question, std::move(result.chain)};
    outcome.rounds = std::move(result.rounds);
  } catch (const std::exception& e) {
    outcome.record = record;
    outcome.rounds.clear();
    outcome.exchanges.clear();
    outcome.error = e.what();
  }
  return outcome;
}

}  // namespace

AggregateReport expand_dataset(std::span<const ChainRecord> records, FimBackend& backend,
                               const ExpansionConfig& config, const std::function<void(RecordOutcome&)>& on_record,
                               bool collect_exchanges) {
  config.validate();
  AggregateReport agg;
  if (records.empty()) return agg;

  if (config.max_in_flight == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto outcome = expand_record(i, records[i], backend, config, nullptr, collect_exchanges);
      accumulate(agg, outcome);
      if (on_record) on_record(outcome);
    }
    return agg;
  }

  // Drivers walk records; their gap calls share one pool sized max_in_flight,
  // which bounds concurrent fill calls. Finished records are emitted in order.
  ThreadPool pool(config.max_in_flight);
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::map<std::size_t, RecordOutcome> done;
  std::size_t emit_next = 0;
  std::exception_ptr callback_failure;

  auto drive = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= records.size()) return;
      auto outcome = expand_record(i, records[i], backend, config, &pool, collect_exchanges);
      std::lock_guard lock(mu);
      done.emplace(i, std::move(outcome));
      while (!done.empty() && done.begin()->first == emit_next) {
        auto& ready = done.begin()->second;
        accumulate(agg, ready);
        if (on_record && !callback_failure) {
          try {
            on_record(ready);
          } catch (...) {
            callback_failure = std::current_exception();
          }
        }
        done.erase(done.begin());
        ++emit_next;
      }
    }
  };

  {
    const std::size_t drivers = std::min(config.max_in_flight, records.size());
    std::vector<std::jthread> threads;
    threads.reserve(drivers);
    for (std::size_t d = 0; d < drivers; ++d) threads.emplace_back(drive);
  }
  if (callback_failure) std::rethrow_exception(callback_failure);
  return agg;
}

namespace {

nlohmann::json round_json(const ExpansionReport& r, bool include_timing) {
  nlohmann::json j;
  j["round"] = r.round;
  j["input_steps"] = r.input_steps;
  j["output_steps"] = r.output_steps;
  j["attempted"] = r.attempted;
  j["inserted"] = r.inserted;
  j["invalid"] = r.invalid;
  j["errored"] = r.errored;
  j["malformed"] = r.malformed;
  auto gaps = nlohmann::json::array();
  for (const auto& g : r.gaps) {
    nlohmann::json gj;
    gj["gap_index"] = g.gap_index;
    gj["candidate"] = g.candidate;
    gj["similarity_to_next"] = g.similarity_to_next.value;
    gj["decision"] = to_string(g.decision);
    gj["attempts"] = g.attempts;
    if (include_timing) gj["latency_ms"] = g.latency_ms;
    if (!g.error.empty()) {
      gj["error_code"] = g.error_code;
      gj["error"] = g.error;
    }
    gaps.push_back(std::move(gj));
  }
  j["gaps"] = std::move(gaps);
  return j;
}

}  // namespace

std::string report_jsonl(const RecordOutcome& outcome, bool include_timing) {
  nlohmann::json j;
  j["id"] = outcome.record.id;
  j["input_steps"] = outcome.input_steps;
  j["output_steps"] = outcome.record.chain.size();
  std::size_t attempted = 0, inserted = 0, invalid = 0, errored = 0, malformed = 0;
  double latency = 0.0;
  auto rounds = nlohmann::json::array();
  for (const auto& r : outcome.rounds) {
    attempted += r.attempted;
    inserted += r.inserted;
    invalid += r.invalid;
    errored += r.errored;
    malformed += r.malformed;
    for (const auto& g : r.gaps) latency += g.latency_ms;
    rounds.push_back(round_json(r, include_timing));
  }
  j["attempted"] = attempted;
  j["inserted"] = inserted;
  j["invalid"] = invalid;
  j["errored"] = errored;
  j["malformed"] = malformed;
  if (include_timing) j["total_latency_ms"] = latency;
  j["rounds"] = std::move(rounds);
  if (!outcome.error.empty()) j["error"] = outcome.error;
  return detail::dump(j);
}

std::string to_json(const AggregateReport& report) {
  nlohmann::json j;
  j["records"] = report.records;
  j["failed_records"] = report.failed_records;
  j["attempted"] = report.attempted;
  j["inserted"] = report.inserted;
  j["invalid"] = report.invalid;
  j["errored"] = report.errored;
  j["malformed"] = report.malformed;
  j["input_steps"] = report.input_steps;
  j["output_steps"] = report.output_steps;
  j["transport_failures"] = report.transport_failures;
  return detail::dump(j);
}

}  // namespace stepfill

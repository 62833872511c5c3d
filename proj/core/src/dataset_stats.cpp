#include "stepfill/dataset_stats.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "json_util.hpp"
#include "stepfill/error.hpp"
#include "stepfill/text.hpp"

namespace stepfill {

std::size_t WhitespaceCounter::count(std::string_view text) const {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = is_space(c);
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

std::size_t CharCounter::count(std::string_view text) const { return decode_utf8(text).size(); }

std::unique_ptr<TokenCounter> make_token_counter(std::string_view id) {
  if (id == "whitespace") return std::make_unique<WhitespaceCounter>();
  if (id == "chars") return std::make_unique<CharCounter>();
  throw Error(Errc::InvalidConfig, "unknown tokenizer '" + std::string(id) + "'");
}

void StatsAccumulator::add(const StepChain& chain, const TokenCounter& counter) {
  if (counter.id() != tokenizer_id_) {
    throw Error(Errc::TokenizerMismatch, "accumulator uses " + tokenizer_id_ + ", counter is " +
                                             std::string(counter.id()));
  }
  add_counts(counter.count(join(chain)), chain.size());
}

void StatsAccumulator::add_counts(std::size_t tokens, std::size_t steps) {
  ++samples_;
  tokens_ += tokens;
  steps_ += steps;
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  if (other.tokenizer_id_ != tokenizer_id_) {
    throw Error(Errc::TokenizerMismatch, tokenizer_id_ + " vs " + other.tokenizer_id_);
  }
  samples_ += other.samples_;
  tokens_ += other.tokens_;
  steps_ += other.steps_;
}

CorpusStats StatsAccumulator::finish() const {
  if (samples_ == 0) throw Error(Errc::EmptyCorpus, "no records to summarize");
  CorpusStats s;
  s.samples = samples_;
  s.total_tokens = tokens_;
  s.total_steps = steps_;
  s.avg_tokens = static_cast<double>(tokens_) / static_cast<double>(samples_);
  s.avg_steps = static_cast<double>(steps_) / static_cast<double>(samples_);
  s.tokenizer_id = tokenizer_id_;
  return s;
}

CorpusStats stats_from_file(const std::filesystem::path& path, const TokenCounter& counter) {
  StatsAccumulator acc{std::string(counter.id())};
  for_each_line(path, [&](std::string_view line, std::size_t number) {
    try {
      acc.add(parse_chain_record(line).chain, counter);
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  });
  return acc.finish();
}

namespace {

FieldDelta field(double before, double after) {
  FieldDelta d{before, after, std::nullopt};
  if (before == after) {
    d.percent = 0.0;
  } else if (before != 0.0) {
    d.percent = (after - before) / before * 100.0;
  }
  return d;
}

nlohmann::json field_json(const FieldDelta& d) {
  nlohmann::json j;
  j["before"] = d.before;
  j["after"] = d.after;
  j["percent"] = d.percent ? nlohmann::json(*d.percent) : nlohmann::json(nullptr);
  j["rendered"] = format_percent(d.percent);
  return j;
}

}  // namespace

StatsDelta diff_stats(const CorpusStats& before, const CorpusStats& after) {
  if (before.tokenizer_id != after.tokenizer_id) {
    throw Error(Errc::TokenizerMismatch,
                "before uses '" + before.tokenizer_id + "', after uses '" + after.tokenizer_id + "'");
  }
  StatsDelta d;
  d.tokenizer_id = before.tokenizer_id;
  d.samples = field(static_cast<double>(before.samples), static_cast<double>(after.samples));
  d.avg_tokens = field(before.avg_tokens, after.avg_tokens);
  d.total_tokens = field(static_cast<double>(before.total_tokens), static_cast<double>(after.total_tokens));
  d.avg_steps = field(before.avg_steps, after.avg_steps);
  return d;
}

std::string format_percent(const std::optional<double>& percent) {
  if (!percent || !std::isfinite(*percent)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", *percent);
  std::string text = buf;
  if (text == "-0.00" || text == "0.00") return "0.00%";
  if (text.front() != '-') text.insert(text.begin(), '+');
  return text + "%";
}

std::string to_json(const CorpusStats& stats) {
  nlohmann::json j;
  j["samples"] = stats.samples;
  j["avg_tokens"] = stats.avg_tokens;
  j["total_tokens"] = stats.total_tokens;
  j["avg_steps"] = stats.avg_steps;
  j["total_steps"] = stats.total_steps;
  j["tokenizer_id"] = stats.tokenizer_id;
  return detail::dump(j);
}

CorpusStats parse_corpus_stats(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::MalformedRecord, "stats document is not a JSON object");
  try {
    CorpusStats s;
    s.samples = j.at("samples").get<std::size_t>();
    s.avg_tokens = j.at("avg_tokens").get<double>();
    s.total_tokens = j.at("total_tokens").get<std::size_t>();
    s.avg_steps = j.at("avg_steps").get<double>();
    s.total_steps = j.value("total_steps", static_cast<std::size_t>(std::llround(s.avg_steps * static_cast<double>(s.samples))));
    s.tokenizer_id = j.at("tokenizer_id").get<std::string>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedRecord, e.what());
  }
}

std::string to_json(const StatsDelta& delta) {
  nlohmann::json j;
  j["tokenizer_id"] = delta.tokenizer_id;
  j["samples"] = field_json(delta.samples);
  j["avg_tokens"] = field_json(delta.avg_tokens);
  j["total_tokens"] = field_json(delta.total_tokens);
  j["avg_steps"] = field_json(delta.avg_steps);
  return detail::dump(j);
}

}  // namespace stepfill

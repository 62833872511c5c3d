#include "stepfill/fim_builder.hpp"

#include <unordered_set>

#include <json.hpp>

#include "json_util.hpp"
#include "stepfill/error.hpp"
#include "stepfill/rng.hpp"
#include "stepfill/text.hpp"

namespace stepfill {

void SamplerConfig::validate() const {
  if (rounds == 0) throw Error(Errc::InvalidConfig, "rounds must be >= 1");
}

namespace {

void reject_special_tokens(std::string_view field, std::string_view text) {
  if (contains_special_token(text)) {
    throw Error(Errc::SpecialTokenCollision, std::string(field) + " contains a FIM special-token literal");
  }
}

std::string join_range(const StepChain& chain, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.append(chain.separator);
    out.append(chain.steps[i].text);
  }
  return out;
}

}  // namespace

PsmLayout format_psm(std::string_view question, std::string_view prefix, std::string_view suffix,
                     std::string_view middle) {
  reject_special_tokens("question", question);
  reject_special_tokens("prefix", prefix);
  reject_special_tokens("suffix", suffix);
  reject_special_tokens("middle", middle);

  PsmLayout layout;
  auto& t = layout.text;
  t.reserve(kFimPrefix.size() + kFimSuffix.size() + kFimMiddle.size() + question.size() + 1 + prefix.size() +
            suffix.size() + middle.size());
  t.append(kFimPrefix).append(question).append("\n").append(prefix);
  t.append(kFimSuffix).append(suffix);
  t.append(kFimMiddle);
  layout.loss_start = t.size();
  t.append(middle);
  layout.loss_end = t.size();
  return layout;
}

PsmLayout format_psm(const FimSample& sample, std::string_view question) {
  return format_psm(question, sample.prefix, sample.suffix, sample.middle);
}

std::string psm_prompt(std::string_view question, std::span<const std::string> prefix_steps,
                       std::span<const std::string> suffix_steps, std::string_view separator) {
  return format_psm(question, join(prefix_steps, separator), join(suffix_steps, separator), "").text;
}

PsmSegments parse_psm(std::string_view psm_text) {
  for (auto token : kSpecialTokens) {
    const auto n = count_occurrences(psm_text, token);
    if (n != 1) {
      throw Error(Errc::MalformedPsm, std::string(token) + " occurs " + std::to_string(n) + " times");
    }
  }
  const auto p = psm_text.find(kFimPrefix);
  const auto s = psm_text.find(kFimSuffix);
  const auto m = psm_text.find(kFimMiddle);
  if (p != 0) throw Error(Errc::MalformedPsm, "text does not start with the prefix token");
  if (!(p < s && s < m)) throw Error(Errc::MalformedPsm, "special tokens are not in PSM order");

  const auto head_begin = p + kFimPrefix.size();
  const auto suffix_begin = s + kFimSuffix.size();
  const auto middle_begin = m + kFimMiddle.size();
  return PsmSegments{std::string(psm_text.substr(head_begin, s - head_begin)),
                     std::string(psm_text.substr(suffix_begin, m - suffix_begin)),
                     std::string(psm_text.substr(middle_begin))};
}

std::string reassemble(std::string_view prefix, std::string_view middle, std::string_view suffix,
                       std::string_view separator) {
  std::string out;
  for (auto part : {prefix, middle, suffix}) {
    if (part.empty()) continue;
    if (!out.empty()) out.append(separator);
    out.append(part);
  }
  return out;
}

std::vector<FimSample> sample_fim(const StepChain& chain, std::string_view source_id, std::string_view question,
                                  const SamplerConfig& config) {
  config.validate();
  if (chain.empty()) throw Error(Errc::MalformedRecord, "chain '" + std::string(source_id) + "' has no steps");

  std::vector<FimSample> out;
  out.reserve(config.rounds);
  for (std::size_t round = 0; round < config.rounds; ++round) {
    auto rng = keyed_stream(config.seed, source_id, round);
    const auto i = static_cast<std::size_t>(rng.below(chain.size()));

    FimSample sample;
    sample.source_id = std::string(source_id);
    sample.round = round;
    sample.middle_index = i;
    sample.prefix = join_range(chain, 0, i);
    sample.middle = chain.steps[i].text;
    sample.suffix = join_range(chain, i + 1, chain.size());
    auto layout = format_psm(sample, question);
    sample.psm_text = std::move(layout.text);
    sample.loss_char_start = layout.loss_start;
    sample.loss_char_end = layout.loss_end;
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<FimSample> build_fim_corpus(std::span<const ChainRecord> records, const SamplerConfig& config) {
  config.validate();
  std::unordered_set<std::string_view> seen;
  std::vector<FimSample> out;
  out.reserve(records.size() * config.rounds);
  for (const auto& record : records) {
    if (!seen.insert(record.id).second) throw Error(Errc::DuplicateId, "duplicate id '" + record.id + "'");
    auto samples = sample_fim(record.chain, record.id, record.question, config);
    for (auto& s : samples) out.push_back(std::move(s));
  }
  return out;
}

std::string to_jsonl(const FimSample& sample) {
  nlohmann::json j;
  j["source_id"] = sample.source_id;
  j["round"] = sample.round;
  j["middle_index"] = sample.middle_index;
  j["prefix"] = sample.prefix;
  j["suffix"] = sample.suffix;
  j["middle"] = sample.middle;
  j["psm_text"] = sample.psm_text;
  j["loss_char_start"] = sample.loss_char_start;
  j["loss_char_end"] = sample.loss_char_end;
  return detail::dump(j);
}

FimSample parse_fim_sample(std::string_view line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::MalformedRecord, "FIM line is not a JSON object");
  try {
    FimSample s;
    s.source_id = j.at("source_id").get<std::string>();
    s.round = j.at("round").get<std::size_t>();
    s.middle_index = j.at("middle_index").get<std::size_t>();
    s.prefix = j.at("prefix").get<std::string>();
    s.suffix = j.at("suffix").get<std::string>();
    s.middle = j.at("middle").get<std::string>();
    s.psm_text = j.at("psm_text").get<std::string>();
    s.loss_char_start = j.at("loss_char_start").get<std::size_t>();
    s.loss_char_end = j.at("loss_char_end").get<std::size_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedRecord, e.what());
  }
}

}  // namespace stepfill

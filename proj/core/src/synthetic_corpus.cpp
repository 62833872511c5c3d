#include "stepfill/synthetic_corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "json_util.hpp"
#include "stepfill/error.hpp"
#include "stepfill/rng.hpp"
#include "stepfill/similarity.hpp"

namespace stepfill {

DropPattern DropPattern::parse(std::string_view text) {
  if (text == "every-other") return DropPattern{DropKind::EveryOther, 1};
  constexpr std::string_view kRandom = "random-k:";
  if (text.substr(0, kRandom.size()) == kRandom) {
    const auto digits = text.substr(kRandom.size());
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && k >= 1) return DropPattern{DropKind::RandomK, k};
  }
  throw Error(Errc::SpecError, "drop pattern must be 'every-other' or 'random-k:K' (K >= 1), got '" +
                                   std::string(text) + "'");
}

std::string DropPattern::to_string() const {
  return kind == DropKind::EveryOther ? "every-other" : "random-k:" + std::to_string(k);
}

void CorpusSpec::validate() const {
  if (operators.empty()) throw Error(Errc::SpecError, "operator set is empty");
  for (char op : operators) {
    if (op != '+' && op != '-' && op != '*') throw Error(Errc::SpecError, std::string("unsupported operator '") + op + "'");
  }
  if (ops_min < 2) throw Error(Errc::SpecError, "ops_min must be >= 2");
  if (ops_max < ops_min) throw Error(Errc::SpecError, "ops_max must be >= ops_min");
  if (operand_max < operand_min) throw Error(Errc::SpecError, "operand_max must be >= operand_min");
  if (!(separation_eta > 0.0 && separation_eta <= 1.0)) throw Error(Errc::SpecError, "separation_eta must lie in (0, 1]");
  if (drop.kind == DropKind::RandomK && drop.k == 0) throw Error(Errc::SpecError, "random-k needs k >= 1");

  // Every intermediate is bounded by max|operand|^(ops+1) (or a sum of such terms).
  const auto bound = static_cast<long double>(std::max<std::int64_t>(
      {std::int64_t{2}, operand_max < 0 ? -operand_max : operand_max, operand_min < 0 ? -operand_min : operand_min}));
  long double worst = bound;
  for (std::size_t i = 0; i < ops_max; ++i) worst = operators.find('*') != std::string::npos ? worst * bound : worst + bound;
  if (worst * 2 >= static_cast<long double>(std::numeric_limits<std::int64_t>::max() / 4)) {
    throw Error(Errc::SpecError, "operand range and ops_max may overflow 64-bit integers");
  }
}

namespace {

std::int64_t apply(std::int64_t a, char op, std::int64_t b) {
  switch (op) {
    case '+': return a + b;
    case '-': return a - b;
    default: return a * b;
  }
}

std::string operand_text(std::int64_t v) {
  return v < 0 ? "(" + std::to_string(v) + ")" : std::to_string(v);
}

// Drop positions among the compute steps 0..ops-1.
std::vector<std::size_t> choose_drops(const DropPattern& drop, std::size_t ops, SplitMix64& rng) {
  std::vector<std::size_t> out;
  if (drop.kind == DropKind::EveryOther) {
    for (std::size_t i = 1; i < ops; i += 2) out.push_back(i);
    return out;
  }
  // k-subsets of {0..ops-k} are in bijection with non-adjacent k-subsets of {0..ops-1}.
  const std::size_t k = std::min(drop.k, (ops + 1) / 2);
  const std::size_t pool = ops - k + 1;
  std::vector<std::size_t> items(pool);
  for (std::size_t i = 0; i < pool; ++i) items[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool - i));
    std::swap(items[i], items[j]);
  }
  out.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(out.begin(), out.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += i;
  return out;
}

std::string problem_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth-%06zu", i);
  return buf;
}

}  // namespace

std::int64_t evaluate(const SyntheticExpression& expr) {
  std::int64_t acc = expr.operands.at(0);
  for (std::size_t i = 0; i < expr.operators.size(); ++i) acc = apply(acc, expr.operators[i], expr.operands.at(i + 1));
  return acc;
}

std::string render_question(const SyntheticExpression& expr) {
  std::string body = operand_text(expr.operands.at(0));
  for (std::size_t i = 0; i < expr.operators.size(); ++i) {
    if (i > 0) body = "(" + body + ")";
    body += std::string(" ") + expr.operators[i] + " " + operand_text(expr.operands.at(i + 1));
  }
  return "Compute the value of " + body + ".";
}

StepChain fine_chain_for(const SyntheticExpression& expr) {
  std::vector<std::string> texts;
  std::int64_t acc = expr.operands.at(0);
  for (std::size_t i = 0; i < expr.operators.size(); ++i) {
    const auto b = expr.operands.at(i + 1);
    const auto c = apply(acc, expr.operators[i], b);
    texts.push_back("Compute " + std::to_string(acc) + " " + expr.operators[i] + " " + std::to_string(b) + " = " +
                    std::to_string(c) + ".");
    acc = c;
  }
  texts.push_back("The answer is " + std::to_string(acc) + ".");
  return StepChain::from_texts(std::move(texts));
}

namespace {

class QuestionParser {
 public:
  explicit QuestionParser(std::string_view s) : s_(s) {}

  SyntheticExpression run() {
    constexpr std::string_view kLead = "Compute the value of ";
    if (s_.substr(0, kLead.size()) != kLead) fail("missing lead-in");
    pos_ = kLead.size();
    SyntheticExpression expr;
    parse_expr(expr);
    expect('.');
    if (pos_ != s_.size()) fail("trailing text");
    if (expr.operators.empty()) fail("no operation");
    return expr;
  }

 private:
  [[noreturn]] void fail(const char* what) const {
    throw Error(Errc::UnparsableQuestion, std::string(what) + " in '" + std::string(s_) + "'");
  }

  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail("unexpected character");
    ++pos_;
  }

  // expr := term (' ' op ' ' operand)*; term := '(' expr ')' | operand
  void parse_expr(SyntheticExpression& expr) {
    if (pos_ < s_.size() && s_[pos_] == '(' && pos_ + 1 < s_.size() && s_[pos_ + 1] != '-') {
      ++pos_;
      parse_expr(expr);
      expect(')');
    } else {
      expr.operands.push_back(parse_operand());
    }
    while (pos_ + 2 < s_.size() && s_[pos_] == ' ') {
      const char op = s_[pos_ + 1];
      if (op != '+' && op != '-' && op != '*') fail("unknown operator");
      pos_ += 2;
      expect(' ');
      expr.operators.push_back(op);
      expr.operands.push_back(parse_operand());
    }
  }

  std::int64_t parse_operand() {
    const bool wrapped = pos_ < s_.size() && s_[pos_] == '(';
    if (wrapped) ++pos_;
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (ec != std::errc()) fail("bad operand");
    if (!wrapped && v < 0) fail("unwrapped negative operand");
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    if (wrapped) expect(')');
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

SyntheticExpression parse_question(std::string_view question) { return QuestionParser(question).run(); }

std::vector<SyntheticProblem> generate(const CorpusSpec& spec) {
  spec.validate();
  std::vector<SyntheticProblem> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const auto id = problem_id(i);
    auto rng = keyed_stream(spec.seed, id, 0);
    for (std::size_t attempt = 0;; ++attempt) {
      SyntheticExpression expr;
      const auto ops = static_cast<std::size_t>(
          rng.between(static_cast<std::int64_t>(spec.ops_min), static_cast<std::int64_t>(spec.ops_max)));
      expr.operands.push_back(rng.between(spec.operand_min, spec.operand_max));
      for (std::size_t k = 0; k < ops; ++k) {
        expr.operators.push_back(spec.operators[rng.below(spec.operators.size())]);
        expr.operands.push_back(rng.between(spec.operand_min, spec.operand_max));
      }
      auto fine = fine_chain_for(expr);
      auto dropped = choose_drops(spec.drop, ops, rng);
      const bool separable = std::all_of(dropped.begin(), dropped.end(), [&](std::size_t d) {
        return similarity(fine.steps[d].text, fine.steps[d + 1].text).value < spec.separation_eta;
      });
      if (!separable) {
        if (attempt > 10'000) throw Error(Errc::SpecError, "cannot draw separable problems under this spec");
        continue;
      }

      SyntheticProblem p;
      p.id = id;
      p.question = render_question(expr);
      p.answer = evaluate(expr);
      std::vector<std::string> coarse;
      for (const auto& step : fine.steps) {
        if (!std::binary_search(dropped.begin(), dropped.end(), step.index)) coarse.push_back(step.text);
      }
      p.coarse_chain = StepChain::from_texts(std::move(coarse));
      p.fine_chain = std::move(fine);
      p.dropped_indices = std::move(dropped);
      out.push_back(std::move(p));
      break;
    }
  }
  return out;
}

std::string oracle_fill(std::string_view question, std::span<const std::string> prefix_steps,
                        std::span<const std::string> suffix_steps) {
  const auto fine = fine_chain_for(parse_question(question));
  // Position of `text` in the fine chain at or after `from`; steps can repeat
  // (e.g. "Compute 6 * 1 = 6." twice), so lookups walk forward.
  const auto find_from = [&](const std::string& text, std::size_t from) -> std::ptrdiff_t {
    for (std::size_t i = from; i < fine.size(); ++i) {
      if (fine.steps[i].text == text) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  };

  std::ptrdiff_t before = -1;
  for (const auto& s : prefix_steps) {
    if (const auto at = find_from(s, static_cast<std::size_t>(before + 1)); at >= 0) before = at;
  }
  auto after = static_cast<std::ptrdiff_t>(fine.size());
  for (const auto& s : suffix_steps) {
    if (const auto at = find_from(s, static_cast<std::size_t>(before + 1)); at >= 0) {
      after = at;
      break;
    }
  }
  if (before + 1 < after) return fine.steps[static_cast<std::size_t>(before + 1)].text;
  return suffix_steps.empty() ? std::string() : suffix_steps.front();
}

ChainRecord coarse_record(const SyntheticProblem& problem) {
  return ChainRecord{problem.id, problem.question, problem.coarse_chain};
}

ChainRecord fine_record(const SyntheticProblem& problem) {
  return ChainRecord{problem.id, problem.question, problem.fine_chain};
}

std::string dropped_jsonl(const SyntheticProblem& problem) {
  nlohmann::json j;
  j["id"] = problem.id;
  j["dropped_indices"] = problem.dropped_indices;
  return detail::dump(j);
}

}  // namespace stepfill

#include "stepfill/step_decomposer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

#include "stepfill/error.hpp"

namespace stepfill {

StepChain StepChain::from_texts(std::vector<std::string> texts, std::string separator) {
  StepChain chain;
  chain.separator = std::move(separator);
  chain.steps.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty() || trim(texts[i]).size() != texts[i].size()) {
      throw Error(Errc::MalformedRecord,
                  "step " + std::to_string(i) + " is empty or has surrounding whitespace");
    }
    chain.steps.push_back(Step{i, std::move(texts[i])});
  }
  return chain;
}

std::vector<std::string> StepChain::texts() const {
  std::vector<std::string> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.text);
  return out;
}

std::string join(const StepChain& chain) {
  std::string out;
  for (std::size_t i = 0; i < chain.steps.size(); ++i) {
    if (i > 0) out.append(chain.separator);
    out.append(chain.steps[i].text);
  }
  return out;
}

namespace {

constexpr std::array<std::string_view, 5> kMarkerWords = {"First", "Next", "Then", "Finally", "Therefore"};

constexpr std::array<std::string_view, 12> kAbbreviations = {
    "e.g.", "i.e.", "etc.", "Mr.", "Mrs.", "Dr.", "eq.", "Eq.", "vs.", "cf.", "Fig.", "approx."};

enum class MathKind { Dollar, DoubleDollar, Paren, Bracket, Env };

struct MathFrame {
  MathKind kind;
  std::string env;
};

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool starts_with_at(std::string_view s, std::size_t i, std::string_view what) {
  return s.substr(i, what.size()) == what;
}

// Reads `{name}` at i; returns the name and sets end past the brace.
bool read_env_name(std::string_view s, std::size_t i, std::string& name, std::size_t& end) {
  if (i >= s.size() || s[i] != '{') return false;
  const auto close = s.find('}', i + 1);
  if (close == std::string_view::npos) return false;
  name.assign(s.substr(i + 1, close - i - 1));
  end = close + 1;
  return true;
}

// Length of a "Step N:" / "Step N." marker at i, or 0.
std::size_t step_marker_length(std::string_view s, std::size_t i) {
  if (!starts_with_at(s, i, "Step")) return 0;
  std::size_t j = i + 4;
  while (j < s.size() && (s[j] == ' ' || s[j] == '\t')) ++j;
  const std::size_t digits_start = j;
  while (j < s.size() && is_digit(s[j])) ++j;
  if (j == digits_start) return 0;
  while (j < s.size() && (s[j] == ' ' || s[j] == '\t')) ++j;
  if (j < s.size() && (s[j] == ':' || s[j] == '.')) return j + 1 - i;
  return 0;
}

// Length of a line-initial list marker ("1. ", "2) ", "- ", "* "), or 0.
std::size_t list_marker_length(std::string_view s, std::size_t i) {
  std::size_t j = i;
  if (j < s.size() && (s[j] == '-' || s[j] == '*')) {
    return (j + 1 < s.size() && s[j + 1] == ' ') ? 1 : 0;
  }
  while (j < s.size() && is_digit(s[j])) ++j;
  if (j == i || j - i > 3 || j >= s.size()) return 0;
  if ((s[j] == '.' || s[j] == ')') && j + 1 < s.size() && is_space(s[j + 1])) return j + 1 - i;
  return 0;
}

bool marker_word_at(std::string_view s, std::size_t i) {
  for (auto word : kMarkerWords) {
    if (!starts_with_at(s, i, word)) continue;
    const auto end = i + word.size();
    if (end >= s.size() || !is_alpha(s[end])) return true;
  }
  return false;
}

bool ends_with_abbreviation(std::string_view s, std::size_t period) {
  std::size_t start = period;
  while (start > 0 && !is_space(s[start - 1])) --start;
  auto word = s.substr(start, period + 1 - start);
  while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
    word.remove_prefix(1);
  }
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

struct Span {
  std::size_t begin;
  std::size_t end;
};

class BoundaryScanner {
 public:
  BoundaryScanner(std::string_view text, const DecomposeConfig& config) : s_(text), config_(config) {}

  std::vector<std::size_t> run() {
    while (i_ < s_.size()) {
      if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
        handle_backslash();
        continue;
      }
      if (s_[i_] == '$') {
        handle_dollar();
        continue;
      }
      if (!math_.empty()) {
        ++i_;
        continue;
      }
      if (is_space(s_[i_])) {
        handle_whitespace();
        continue;
      }
      const char c = s_[i_];
      if ((c == '.' || c == '!' || c == '?') && i_ >= marker_end_) {
        handle_terminator();
        continue;
      }
      ++i_;
    }
    if (!math_.empty()) {
      throw Error(Errc::UnbalancedMath, "math delimiter opened at byte " + std::to_string(open_at_.back()) +
                                            " is never closed");
    }
    return std::move(starts_);
  }

 private:
  void push(MathKind kind, std::string env = {}) {
    math_.push_back(MathFrame{kind, std::move(env)});
    open_at_.push_back(i_);
  }

  void pop() {
    math_.pop_back();
    open_at_.pop_back();
  }

  // Display math ending in a sentence terminator, e.g. `$$x = 1.$$ Then`.
  void close_display(std::size_t closer) {
    const auto kind = math_.back().kind;
    pop();
    if (!math_.empty() || kind == MathKind::Dollar || kind == MathKind::Paren) return;
    std::size_t k = closer;
    while (k > 0 && is_space(s_[k - 1])) --k;
    if (k == 0 || (s_[k - 1] != '.' && s_[k - 1] != '!' && s_[k - 1] != '?')) return;
    std::size_t j = i_;
    if (j >= s_.size() || !is_space(s_[j])) return;
    while (j < s_.size() && is_space(s_[j])) ++j;
    if (j >= s_.size()) return;
    if (is_upper(s_[j]) || marker_word_at(s_, j)) starts_.push_back(j);
  }

  [[noreturn]] void stray(std::string_view what) const {
    throw Error(Errc::UnbalancedMath, "unmatched " + std::string(what) + " at byte " + std::to_string(i_));
  }

  bool top_is(MathKind kind) const { return !math_.empty() && math_.back().kind == kind; }

  void handle_backslash() {
    const char next = s_[i_ + 1];
    if (next == '(' || next == '[') {
      push(next == '(' ? MathKind::Paren : MathKind::Bracket);
      i_ += 2;
      return;
    }
    if (next == ')' || next == ']') {
      const auto want = next == ')' ? MathKind::Paren : MathKind::Bracket;
      if (!top_is(want)) stray(next == ')' ? "\\)" : "\\]");
      const auto closer = i_;
      i_ += 2;
      close_display(closer);
      return;
    }
    std::string name;
    std::size_t end = 0;
    if (starts_with_at(s_, i_, "\\begin") && read_env_name(s_, i_ + 6, name, end)) {
      push(MathKind::Env, name);
      i_ = end;
      return;
    }
    if (starts_with_at(s_, i_, "\\end") && read_env_name(s_, i_ + 4, name, end)) {
      if (!top_is(MathKind::Env) || math_.back().env != name) stray("\\end{" + name + "}");
      const auto closer = i_;
      i_ = end;
      close_display(closer);
      return;
    }
    // Escapes such as \$ or \\ are consumed as a unit.
    i_ += 2;
  }

  void handle_dollar() {
    const bool doubled = i_ + 1 < s_.size() && s_[i_ + 1] == '$';
    if (top_is(MathKind::Dollar)) {
      pop();
      i_ += 1;
    } else if (doubled && top_is(MathKind::DoubleDollar)) {
      const auto closer = i_;
      i_ += 2;
      close_display(closer);
    } else if (doubled) {
      push(MathKind::DoubleDollar);
      i_ += 2;
    } else {
      push(MathKind::Dollar);
      i_ += 1;
    }
  }

  void handle_whitespace() {
    std::size_t newlines = 0;
    while (i_ < s_.size() && is_space(s_[i_])) {
      if (s_[i_] == '\n') ++newlines;
      ++i_;
    }
    if (i_ >= s_.size()) return;
    if (const auto len = step_marker_length(s_, i_); len > 0) {
      starts_.push_back(i_);
      marker_end_ = i_ + len;
      return;
    }
    if (newlines == 0) return;
    if (newlines >= 2 && config_.split_on_blank_lines) {
      starts_.push_back(i_);
    } else if (marker_word_at(s_, i_)) {
      starts_.push_back(i_);
    } else if (const auto len = list_marker_length(s_, i_); len > 0) {
      starts_.push_back(i_);
      marker_end_ = i_ + len;
    }
  }

  void handle_terminator() {
    const std::size_t at = i_;
    std::size_t j = i_ + 1;
    while (j < s_.size() && (s_[j] == ')' || s_[j] == '"' || s_[j] == '\'' || s_[j] == ']')) ++j;
    i_ = j;
    if (j >= s_.size() || !is_space(s_[j])) return;
    std::size_t k = j;
    while (k < s_.size() && is_space(s_[k])) ++k;
    if (k >= s_.size()) return;
    const bool marker = marker_word_at(s_, k) || step_marker_length(s_, k) > 0;
    if (!marker && !is_upper(s_[k])) return;
    if (!marker && s_[at] == '.' && ends_with_abbreviation(s_, at)) return;
    // The following whitespace run decides any marker skipping; record the start here.
    starts_.push_back(k);
    if (const auto len = step_marker_length(s_, k); len > 0) marker_end_ = k + len;
    i_ = k;
  }

  std::string_view s_;
  const DecomposeConfig& config_;
  std::size_t i_ = 0;
  std::size_t marker_end_ = 0;
  std::vector<MathFrame> math_;
  std::vector<std::size_t> open_at_;
  std::vector<std::size_t> starts_;
};

bool has_content(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u) != 0 || c == '$' || c == '\\';
  });
}

std::size_t code_points(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

}  // namespace

StepChain decompose(std::string_view solution, const DecomposeConfig& config) {
  if (trim(solution).empty()) throw Error(Errc::EmptySolution, "solution is blank");
  if (!has_content(solution)) throw Error(Errc::EmptySolution, "solution has no content besides punctuation");

  auto starts = BoundaryScanner(solution, config).run();
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

  std::vector<Span> spans;
  std::size_t begin = 0;
  for (auto start : starts) {
    if (start > begin) spans.push_back({begin, start});
    begin = start;
  }
  spans.push_back({begin, solution.size()});

  auto text_of = [&](const Span& sp) { return trim(solution.substr(sp.begin, sp.end - sp.begin)); };
  auto small = [&](const Span& sp) {
    const auto t = text_of(sp);
    return code_points(t) < config.min_step_chars || !has_content(t);
  };

  std::vector<Span> merged;
  for (const auto& sp : spans) {
    if (text_of(sp).empty()) continue;
    if (!merged.empty() && small(sp)) {
      merged.back().end = sp.end;
    } else {
      merged.push_back(sp);
    }
  }
  while (merged.size() > 1 && small(merged.front())) {
    merged[1].begin = merged[0].begin;
    merged.erase(merged.begin());
  }

  StepChain chain;
  chain.separator = config.separator;
  chain.steps.reserve(merged.size());
  for (const auto& sp : merged) {
    chain.steps.push_back(Step{chain.steps.size(), std::string(text_of(sp))});
  }
  return chain;
}

}  // namespace stepfill

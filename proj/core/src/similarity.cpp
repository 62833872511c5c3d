#include "stepfill/similarity.hpp"

#include <algorithm>
#include <string>
#include <tuple>
#include <utility>

#include "stepfill/error.hpp"
#include "stepfill/text.hpp"

namespace stepfill {

namespace {

struct Range {
  std::size_t alo, ahi, blo, bhi;
};

// Longest common block in a[alo,ahi) x b[blo,bhi); ties resolve to the
// smallest start in a, then the smallest start in b.
MatchingBlock longest_match(std::u32string_view a, std::u32string_view b, const Range& r,
                            std::vector<std::size_t>& prev, std::vector<std::size_t>& cur) {
  MatchingBlock best{r.alo, r.blo, 0};
  const std::size_t width = r.bhi - r.blo;
  prev.assign(width + 1, 0);
  cur.assign(width + 1, 0);
  for (std::size_t i = r.alo; i < r.ahi; ++i) {
    for (std::size_t j = r.blo; j < r.bhi; ++j) {
      const std::size_t col = j - r.blo + 1;
      if (a[i] == b[j]) {
        const std::size_t k = prev[col - 1] + 1;
        cur[col] = k;
        if (k > best.size) best = MatchingBlock{i + 1 - k, j + 1 - k, k};
      } else {
        cur[col] = 0;
      }
    }
    std::swap(prev, cur);
  }
  return best;
}

}  // namespace

std::vector<MatchingBlock> matching_blocks(std::u32string_view a, std::u32string_view b) {
  std::vector<MatchingBlock> blocks;
  std::vector<Range> todo{{0, a.size(), 0, b.size()}};
  std::vector<std::size_t> prev;
  std::vector<std::size_t> cur;
  while (!todo.empty()) {
    const Range r = todo.back();
    todo.pop_back();
    if (r.alo >= r.ahi || r.blo >= r.bhi) continue;
    const auto m = longest_match(a, b, r, prev, cur);
    if (m.size == 0) continue;
    blocks.push_back(m);
    todo.push_back({r.alo, m.a, r.blo, m.b});
    todo.push_back({m.a + m.size, r.ahi, m.b + m.size, r.bhi});
  }
  std::sort(blocks.begin(), blocks.end(),
            [](const MatchingBlock& x, const MatchingBlock& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
  return blocks;
}

SimilarityScore similarity(std::string_view a, std::string_view b) {
  const auto na = decode_utf8(normalize_ws(a));
  const auto nb = decode_utf8(normalize_ws(b));
  const std::size_t total = na.size() + nb.size();
  if (total == 0) return SimilarityScore{1.0};
  std::size_t matched = 0;
  for (const auto& m : matching_blocks(na, nb)) matched += m.size;
  return SimilarityScore{2.0 * static_cast<double>(matched) / static_cast<double>(total)};
}

void GateConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(Errc::InvalidConfig, "eta must lie in (0, 1]");
}

GateOutcome gate(std::string_view candidate, std::string_view next_step, const GateConfig& config) {
  GateOutcome out;
  if (trim(candidate).empty()) return out;
  out.score = similarity(candidate, next_step);
  out.decision = out.score.value >= config.eta ? GateDecision::Invalid : GateDecision::Valid;
  return out;
}

}  // namespace stepfill

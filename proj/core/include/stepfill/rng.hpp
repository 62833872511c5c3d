#pragma once

#include <cstdint>
#include <string_view>

namespace stepfill {

/// FNV-1a over bytes; stable across platforms.
[[nodiscard]] constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// SplitMix64 generator with bounded draws that are identical on every platform.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound); bound must be positive. Rejection sampling, no modulo bias.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform integer in [lo, hi].
  constexpr std::int64_t between(std::int64_t lo, std::int64_t hi) noexcept {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(span == 0 ? next() : below(span));
  }

 private:
  std::uint64_t state_;
};

/// Independent stream for (seed, key, index): the value depends only on the
/// triple, never on how many other streams were drawn first.
[[nodiscard]] constexpr SplitMix64 keyed_stream(std::uint64_t seed, std::string_view key,
                                                std::uint64_t index) noexcept {
  SplitMix64 mix(seed ^ 0x5851f42d4c957f2dULL);
  std::uint64_t state = mix.next() ^ fnv1a64(key);
  state = SplitMix64(state).next() ^ (index * 0x9e3779b97f4a7c15ULL);
  return SplitMix64(SplitMix64(state).next());
}

}  // namespace stepfill

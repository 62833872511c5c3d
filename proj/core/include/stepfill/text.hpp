#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace stepfill {

inline constexpr std::string_view kFimPrefix = "<|fim_prefix|>";
inline constexpr std::string_view kFimSuffix = "<|fim_suffix|>";
inline constexpr std::string_view kFimMiddle = "<|fim_middle|>";
inline constexpr std::array<std::string_view, 3> kSpecialTokens = {kFimPrefix, kFimSuffix, kFimMiddle};

/// Default separator between steps of a chain and between steps inside a PSM group.
inline constexpr std::string_view kDefaultSeparator = "\n";

[[nodiscard]] bool is_space(char c) noexcept;

[[nodiscard]] std::string_view trim(std::string_view s) noexcept;

/// Collapses every run of ASCII whitespace to one space and trims both ends.
[[nodiscard]] std::string normalize_ws(std::string_view s);

[[nodiscard]] std::string join(std::span<const std::string> parts, std::string_view separator);

[[nodiscard]] bool contains_special_token(std::string_view s) noexcept;

/// Offset of the earliest special-token literal in s, or npos.
[[nodiscard]] std::size_t find_first_special_token(std::string_view s) noexcept;

[[nodiscard]] std::size_t count_occurrences(std::string_view haystack, std::string_view needle) noexcept;

[[nodiscard]] bool is_valid_utf8(std::string_view s) noexcept;

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD one byte at a time.
[[nodiscard]] std::u32string decode_utf8(std::string_view s);

}  // namespace stepfill

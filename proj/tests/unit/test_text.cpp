#include <doctest.h>

#include "stepfill/rng.hpp"
#include "stepfill/text.hpp"

using namespace stepfill;

TEST_CASE("trim and normalize_ws") {
  CHECK(trim("  a b \n") == "a b");
  CHECK(trim(" \t\n") == "");
  CHECK(normalize_ws("  a \n\n b\tc  ") == "a b c");
  CHECK(normalize_ws("") == "");
}

TEST_CASE("special tokens") {
  CHECK_FALSE(contains_special_token("plain <|fim text"));
  CHECK(contains_special_token("x<|fim_middle|>"));
  CHECK(find_first_special_token("ab<|fim_suffix|>c<|fim_prefix|>") == 2);
  CHECK(find_first_special_token("none") == std::string_view::npos);
  CHECK(count_occurrences("aXaXa", "a") == 3);
  CHECK(count_occurrences("aaaa", "aa") == 2);
}

TEST_CASE("utf8 validation and decoding") {
  CHECK(is_valid_utf8("caf\xc3\xa9"));
  CHECK_FALSE(is_valid_utf8("\xc3"));
  CHECK_FALSE(is_valid_utf8("\xed\xa0\x80"));  // surrogate
  CHECK_FALSE(is_valid_utf8("\xc0\xaf"));      // overlong
  CHECK(decode_utf8("caf\xc3\xa9") == U"café");
  CHECK(decode_utf8("a\xff" "b") == U"a�b");
}

TEST_CASE("keyed streams are independent of draw order") {
  auto a = keyed_stream(7, "rec-1", 2);
  auto b = keyed_stream(7, "rec-1", 2);
  auto other = keyed_stream(7, "rec-1", 3);
  const auto first = a.next();
  CHECK(first == b.next());
  CHECK(first != other.next());
  SplitMix64 r(1);
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.between(-3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
  }
}

#include <doctest.h>

#include "oracles/math_balance.hpp"
#include "stepfill/records.hpp"
#include "stepfill/step_decomposer.hpp"
#include "support.hpp"

using namespace stepfill;

namespace {

std::vector<std::string> split(std::string_view text, const DecomposeConfig& cfg = {}) {
  return decompose(text, cfg).texts();
}

}  // namespace

TEST_CASE("marker words start steps") {
  CHECK(split("First, compute 2+3=5. Next, multiply by 4 to get 20.") ==
        std::vector<std::string>{"First, compute 2+3=5.", "Next, multiply by 4 to get 20."});
}

TEST_CASE("inline math is never split") {
  const auto steps = split("The value is $x = 1.5$. So the answer is 1.5.");
  REQUIRE(steps.size() == 2);
  CHECK(steps[0] == "The value is $x = 1.5$.");
  CHECK(steps[1] == "So the answer is 1.5.");
}

TEST_CASE("explicit step markers") {
  CHECK(split("Step 1: Let x=2. Step 2: Then x+1=3.") ==
        std::vector<std::string>{"Step 1: Let x=2.", "Step 2: Then x+1=3."});
  CHECK(split("Step 1. Divide 120 by 15 to get 8. Step 2. Check the product again.") ==
        std::vector<std::string>{"Step 1. Divide 120 by 15 to get 8.", "Step 2. Check the product again."});
}

TEST_CASE("blank input") {
  CHECK_ERRC(decompose(""), Errc::EmptySolution);
  CHECK_ERRC(decompose(" \n\t "), Errc::EmptySolution);
  CHECK_ERRC(decompose("... !!"), Errc::EmptySolution);
}

TEST_CASE("unbalanced math is reported") {
  CHECK_ERRC(decompose("We have $x = 2. Then y = 3."), Errc::UnbalancedMath);
  CHECK_ERRC(decompose("Close \\) without open."), Errc::UnbalancedMath);
  CHECK_ERRC(decompose("\\begin{align} x \\end{equation}"), Errc::UnbalancedMath);
}

TEST_CASE("display math protects its periods") {
  const auto steps = split("Hence \\[ a = 1. B = 2. \\] holds here. Now we are done with it.");
  REQUIRE(steps.size() == 2);
  CHECK(steps[0] == "Hence \\[ a = 1. B = 2. \\] holds here.");
}

TEST_CASE("a sentence can end inside display math") {
  const auto steps = split("We use $$S = \\frac{n(n+1)}{2}.$$ Plugging in n = 10 gives 55.");
  REQUIRE(steps.size() == 2);
  CHECK(steps[0] == "We use $$S = \\frac{n(n+1)}{2}.$$");
}

TEST_CASE("escaped dollars are text") {
  const auto steps = split("The shirt costs \\$40 today. The discount brings it to \\$30.");
  REQUIRE(steps.size() == 2);
  CHECK(steps[1] == "The discount brings it to \\$30.");
}

TEST_CASE("abbreviations do not end sentences") {
  const auto steps = split("Use a known identity, e.g. The binomial theorem applies here. Then expand it fully.");
  REQUIRE(steps.size() == 2);
  CHECK(steps[0] == "Use a known identity, e.g. The binomial theorem applies here.");
}

TEST_CASE("lowercase continuation is not a boundary") {
  CHECK(split("It costs 3.5 dollars. so we pay it.").size() == 1);
}

TEST_CASE("short fragments merge into the previous step") {
  CHECK(split("We add the numbers together. So 5. The answer is five.") ==
        std::vector<std::string>{"We add the numbers together. So 5.", "The answer is five."});
  DecomposeConfig loose;
  loose.min_step_chars = 1;
  CHECK(split("We add the numbers together. So 5. The answer is five.", loose).size() == 3);
}

TEST_CASE("a short leading fragment merges forward") {
  CHECK(split("Ok. Now we multiply both sides by four.") ==
        std::vector<std::string>{"Ok. Now we multiply both sides by four."});
}

TEST_CASE("blank lines and list items") {
  CHECK(split("Add the two numbers\n\nthen report the total") ==
        std::vector<std::string>{"Add the two numbers", "then report the total"});
  DecomposeConfig no_blank;
  no_blank.split_on_blank_lines = false;
  CHECK(split("Add the two numbers\n\nthen report the total", no_blank).size() == 1);
  CHECK(split("Plan of attack:\n1. add the first pair\n2. multiply the result").size() == 3);
  CHECK(split("Plan of attack:\n- add the first pair\n- multiply the result").size() == 3);
}

TEST_CASE("join") {
  CHECK(join(StepChain::from_texts({"a.", "b."})) == "a.\nb.");
  CHECK(join(StepChain::from_texts({"only."})) == "only.");
  CHECK(join(StepChain::from_texts({"a.", "b."}, " ")) == "a. b.");
}

TEST_CASE("from_texts rejects untrimmed steps") {
  CHECK_ERRC(StepChain::from_texts({"ok", ""}), Errc::MalformedRecord);
  CHECK_ERRC(StepChain::from_texts({" padded"}), Errc::MalformedRecord);
}

TEST_CASE("fixture corpus: round trip and math balance") {
  const auto records = read_cot_records(test_support::data_dir() / "cot_sample.jsonl");
  REQUIRE(records.size() == 50);
  std::size_t multi = 0;
  for (const auto& r : records) {
    INFO(r.id);
    const auto chain = decompose(r.solution);
    CHECK(normalize_ws(join(chain)) == normalize_ws(r.solution));
    CHECK(oracle::math_balanced(r.solution));
    for (const auto& step : chain.steps) {
      CHECK(oracle::math_balanced(step.text));
      CHECK(trim(step.text) == step.text);
    }
    if (chain.size() > 1) ++multi;
  }
  CHECK(multi == records.size());
}

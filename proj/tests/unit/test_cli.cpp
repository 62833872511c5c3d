#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "cli/cli.hpp"
#include "stepfill/records.hpp"
#include "support.hpp"

using namespace stepfill;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = stepfill::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(invoke({}).code == stepfill::cli::kExitUsage);
  CHECK(invoke({"frobnicate"}).code == stepfill::cli::kExitUsage);
  CHECK(invoke({"build-fim", "--input", "x", "--output", "y"}).code == stepfill::cli::kExitUsage);  // no seed
  CHECK(invoke({"gen-synth", "--count", "3", "--out", "d"}).code == stepfill::cli::kExitUsage);
  CHECK(invoke({"expand", "--input", "x", "--output", "y", "--backend", "magic"}).code == stepfill::cli::kExitUsage);
  CHECK(invoke({"--help"}).code == stepfill::cli::kExitOk);
}

TEST_CASE("missing input exits 2") {
  test_support::TempDir dir;
  const auto r = invoke({"stats", "--input", dir.file("nope.jsonl")});
  CHECK(r.code == stepfill::cli::kExitIo);
  CHECK(r.err.find("\"error_code\":\"Io\"") != std::string::npos);
}

TEST_CASE("decompose flags bad records and keeps going") {
  test_support::TempDir dir;
  write_text_file(dir.file("cot.jsonl"),
                  "{\"id\":\"a\",\"question\":\"Q\",\"solution\":\"First, add them up. Then, divide by two.\"}\n"
                  "{\"id\":\"b\",\"question\":\"Q\",\"solution\":\"We have $x = 2. Then stop.\"}\n"
                  "{\"id\":\"c\",\"question\":\"Q\",\"solution\":\"Use <|fim_middle|> here.\"}\n"
                  "{\"id\":\"a\",\"question\":\"Q\",\"solution\":\"Another one entirely.\"}\n"
                  "{\"id\":\"d\",\"question\":\"Q\",\"solution\":\"   \"}\n");
  const auto r = invoke({"decompose", "--input", dir.file("cot.jsonl"), "--output", dir.file("chains.jsonl"), "--rejects",
                      dir.file("rejects.jsonl")});
  CHECK(r.code == stepfill::cli::kExitOk);
  const auto chains = read_chain_records(dir.file("chains.jsonl"));
  REQUIRE(chains.size() == 1);
  CHECK(chains[0].chain.texts() == std::vector<std::string>{"First, add them up.", "Then, divide by two."});
  std::vector<std::string> codes;
  for_each_line(dir.file("rejects.jsonl"), [&](std::string_view line, std::size_t) {
    codes.push_back(nlohmann::json::parse(line)["error_code"]);
  });
  CHECK(codes == std::vector<std::string>{"UnbalancedMath", "SpecialTokenCollision", "DuplicateId", "EmptySolution"});
  CHECK(std::filesystem::exists(dir.file("chains.jsonl.config.json")));
}

TEST_CASE("malformed input lines are I/O errors") {
  test_support::TempDir dir;
  write_text_file(dir.file("cot.jsonl"), "{not json\n");
  CHECK(invoke({"decompose", "--input", dir.file("cot.jsonl"), "--output", dir.file("o.jsonl")}).code == stepfill::cli::kExitIo);
}

TEST_CASE("pipeline: gen-synth, expand, stats, compare") {
  test_support::TempDir dir;
  const auto syn = dir.file("syn");
  REQUIRE(invoke({"gen-synth", "--count", "40", "--seed", "3", "--out", syn}).code == stepfill::cli::kExitOk);
  for (const char* f : {"coarse.jsonl", "fine.jsonl", "dropped.jsonl", "config.json"}) {
    CHECK(std::filesystem::exists(std::filesystem::path(syn) / f));
  }
  const auto expanded = dir.file("expanded.jsonl");
  const auto r = invoke({"expand", "--input", syn + "/coarse.jsonl", "--output", expanded, "--report",
                      dir.file("report.jsonl"), "--backend", "oracle"});
  REQUIRE(r.code == stepfill::cli::kExitOk);
  CHECK(read_text_file(expanded) == read_text_file(syn + "/fine.jsonl"));

  REQUIRE(invoke({"stats", "--input", syn + "/coarse.jsonl", "--output", dir.file("before.json")}).code == 0);
  const auto after = invoke({"stats", "--input", expanded, "--output", dir.file("after.json")});
  REQUIRE(after.code == 0);
  CHECK(nlohmann::json::parse(after.out)["samples"] == 40);
  const auto cmp = invoke({"compare", "--before", dir.file("before.json"), "--after", dir.file("after.json")});
  REQUIRE(cmp.code == 0);
  const auto delta = nlohmann::json::parse(cmp.out);
  CHECK(delta["samples"]["rendered"] == "0.00%");
  CHECK(delta["avg_steps"]["percent"].template get<double>() > 0);
}

TEST_CASE("build-fim writes rounds per record") {
  test_support::TempDir dir;
  REQUIRE(invoke({"gen-synth", "--count", "10", "--seed", "1", "--out", dir.file("s")}).code == 0);
  const auto r =
      invoke({"build-fim", "--input", dir.file("s") + "/fine.jsonl", "--output", dir.file("fim.jsonl"), "--seed", "7"});
  REQUIRE(r.code == 0);
  std::size_t lines = 0;
  for_each_line(dir.file("fim.jsonl"), [&](std::string_view, std::size_t) { ++lines; });
  CHECK(lines == 30);
}

TEST_CASE("config files supply defaults that flags override") {
  test_support::TempDir dir;
  write_text_file(dir.file("run.toml"), "# synthetic run\n[gen-synth]\ncount = 4\nseed = 9\nops_max = 2\n");
  REQUIRE(invoke({"gen-synth", "--config", dir.file("run.toml"), "--out", dir.file("a")}).code == 0);
  REQUIRE(invoke({"gen-synth", "--config=" + dir.file("run.toml"), "--count", "6", "--out", dir.file("b")}).code == 0);
  std::size_t a = 0, b = 0;
  for_each_line(dir.file("a") + "/fine.jsonl", [&](std::string_view line, std::size_t) {
    ++a;
    CHECK(parse_chain_record(line).chain.size() == 3);
  });
  for_each_line(dir.file("b") + "/fine.jsonl", [&](std::string_view, std::size_t) { ++b; });
  CHECK(a == 4);
  CHECK(b == 6);
  const auto cfg = nlohmann::json::parse(read_text_file(dir.file("b") + "/config.json"));
  CHECK(cfg["config"]["count"] == 6);
  CHECK(cfg["config"]["seed"] == 9);
  CHECK(invoke({"gen-synth", "--config", dir.file("missing.toml"), "--out", dir.file("c")}).code == stepfill::cli::kExitIo);
}

TEST_CASE("expand against an unreachable endpoint exits 3") {
  test_support::TempDir dir;
  REQUIRE(invoke({"gen-synth", "--count", "2", "--seed", "1", "--out", dir.file("s")}).code == 0);
  const auto r = invoke({"expand", "--input", dir.file("s") + "/coarse.jsonl", "--output", dir.file("o.jsonl"),
                      "--backend", "http", "--endpoint-url", "http://127.0.0.1:1/v1/completions", "--retry-limit", "0",
                      "--timeout-ms", "500"});
  CHECK(r.code == stepfill::cli::kExitBackendUnreachable);
  CHECK(read_text_file(dir.file("o.jsonl")) == read_text_file(dir.file("s") + "/coarse.jsonl"));
}

TEST_CASE("expand records and replays fixtures") {
  test_support::TempDir dir;
  REQUIRE(invoke({"gen-synth", "--count", "5", "--seed", "2", "--out", dir.file("s")}).code == 0);
  const auto input = dir.file("s") + "/coarse.jsonl";
  REQUIRE(invoke({"expand", "--input", input, "--output", dir.file("o1.jsonl"), "--backend", "oracle",
               "--record-fixtures", dir.file("fx.jsonl")})
              .code == 0);
  REQUIRE(invoke({"expand", "--input", input, "--output", dir.file("o2.jsonl"), "--backend", "replay", "--fixtures",
               dir.file("fx.jsonl")})
              .code == 0);
  CHECK(read_text_file(dir.file("o1.jsonl")) == read_text_file(dir.file("o2.jsonl")));
  CHECK(invoke({"expand", "--input", input, "--output", dir.file("o3.jsonl"), "--backend", "replay"}).code ==
        cli::kExitUsage);
}

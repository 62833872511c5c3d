#include "cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>

#include "stepfill/dataset_stats.hpp"
#include "stepfill/error.hpp"
#include "stepfill/expansion_engine.hpp"
#include "stepfill/fim_builder.hpp"
#include "stepfill/model_backends.hpp"
#include "stepfill/records.hpp"
#include "stepfill/step_decomposer.hpp"
#include "stepfill/synthetic_corpus.hpp"

namespace stepfill::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

void event(std::ostream& err, const std::string& name, json fields = json::object()) {
  fields["event"] = name;
  err << dump(fields) << '\n';
}

// Every run leaves its effective configuration next to its primary output.
void write_provenance(const fs::path& path, const std::string& subcommand, const json& config) {
  json j;
  j["tool"] = "stepfill";
  j["version"] = kVersion;
  j["subcommand"] = subcommand;
  j["config"] = config;
  write_text_file(path, j.dump(2) + "\n");
}

fs::path sidecar(const fs::path& output) { return fs::path(output.string() + ".config.json"); }

// ---------------------------------------------------------------- decompose

struct DecomposeOpts {
  std::string input;
  std::string output;
  std::string rejects;
  std::size_t min_step_chars = 10;
  bool no_blank_line_split = false;
};

void add_decompose(CLI::App& app, DecomposeOpts& o) {
  app.add_option("--input", o.input, "CoT JSONL: {id, question, solution}")->required();
  app.add_option("--output", o.output, "Chain JSONL: {id, question, steps}")->required();
  app.add_option("--rejects", o.rejects, "Write flagged records {id, error_code, error} here");
  app.add_option("--min-step-chars", o.min_step_chars, "Fragments shorter than this merge into a neighbour")
      ->capture_default_str();
  app.add_flag("--no-blank-line-split", o.no_blank_line_split, "Do not treat blank lines as step boundaries");
}

int run_decompose(const DecomposeOpts& o, std::ostream& err) {
  DecomposeConfig cfg;
  cfg.min_step_chars = o.min_step_chars;
  cfg.split_on_blank_lines = !o.no_blank_line_split;

  json config = {{"input", o.input},
                 {"output", o.output},
                 {"rejects", o.rejects},
                 {"min_step_chars", o.min_step_chars},
                 {"split_on_blank_lines", cfg.split_on_blank_lines}};
  event(err, "config", {{"subcommand", "decompose"}, {"config", config}});

  JsonlWriter out(o.output);
  std::unique_ptr<JsonlWriter> rejects;
  if (!o.rejects.empty()) rejects = std::make_unique<JsonlWriter>(o.rejects);
  std::unordered_set<std::string> seen;
  std::size_t written = 0;
  std::size_t flagged = 0;

  auto flag = [&](const std::string& id, const Error& e) {
    ++flagged;
    event(err, "flagged", {{"id", id}, {"error_code", to_string(e.code())}, {"error", e.what()}});
    if (rejects) rejects->write(dump({{"id", id}, {"error_code", to_string(e.code())}, {"error", e.what()}}));
  };

  for_each_line(o.input, [&](std::string_view line, std::size_t number) {
    CotRecord record;
    try {
      record = parse_cot_record(line);
    } catch (const Error& e) {
      throw Error(e.code(), o.input + ":" + std::to_string(number) + ": " + e.what());
    }
    try {
      if (!seen.insert(record.id).second) throw Error(Errc::DuplicateId, "duplicate id '" + record.id + "'");
      if (trim(record.question).empty()) throw Error(Errc::MalformedRecord, "question is blank");
      if (contains_special_token(record.question) || contains_special_token(record.solution)) {
        throw Error(Errc::SpecialTokenCollision, "record contains a FIM special-token literal");
      }
      ChainRecord chain{record.id, record.question, decompose(record.solution, cfg)};
      out.write(to_jsonl(chain));
      ++written;
    } catch (const Error& e) {
      flag(record.id, e);
    }
  });
  out.flush();
  write_provenance(sidecar(o.output), "decompose", config);
  event(err, "done", {{"subcommand", "decompose"}, {"written", written}, {"flagged", flagged}});
  return kExitOk;
}

// ---------------------------------------------------------------- build-fim

struct BuildFimOpts {
  std::string input;
  std::string output;
  std::size_t rounds = 3;
  std::uint64_t seed = 0;
};

void add_build_fim(CLI::App& app, BuildFimOpts& o) {
  app.add_option("--input", o.input, "Chain JSONL")->required();
  app.add_option("--output", o.output, "FIM sample JSONL")->required();
  app.add_option("--rounds", o.rounds, "Samples drawn per record")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Sampling seed")->required();
}

int run_build_fim(const BuildFimOpts& o, std::ostream& err) {
  json config = {{"input", o.input}, {"output", o.output}, {"rounds", o.rounds}, {"seed", o.seed}};
  event(err, "config", {{"subcommand", "build-fim"}, {"config", config}});

  const auto records = read_chain_records(o.input);
  const auto samples = build_fim_corpus(records, SamplerConfig{o.rounds, o.seed});
  JsonlWriter out(o.output);
  for (const auto& s : samples) out.write(to_jsonl(s));
  out.flush();
  write_provenance(sidecar(o.output), "build-fim", config);
  event(err, "done", {{"subcommand", "build-fim"}, {"records", records.size()}, {"samples", samples.size()}});
  return kExitOk;
}

// ---------------------------------------------------------------- expand

struct ExpandOpts {
  std::string input;
  std::string output;
  std::string report;
  std::string backend = "oracle";
  double eta = 0.8;
  std::size_t iterations = 1;
  std::size_t max_in_flight = 4;
  bool include_leading_gap = false;
  std::size_t gap_retries = 0;
  std::uint64_t seed = 0;
  std::string endpoint_url;
  std::string auth_token_env;
  int timeout_ms = 30000;
  int retry_limit = 3;
  int backoff_ms = 200;
  std::string fixtures;
  std::size_t max_new_chars = 2048;
  int max_tokens = 256;
  double temperature = 0.0;
  std::string record_fixtures;
  bool timing = false;
};

void add_expand(CLI::App& app, ExpandOpts& o) {
  app.add_option("--input", o.input, "Chain JSONL")->required();
  app.add_option("--output", o.output, "Expanded chain JSONL")->required();
  app.add_option("--report", o.report, "Per-record report JSONL");
  app.add_option("--backend", o.backend, "FIM backend")
      ->check(CLI::IsMember({"http", "oracle", "replay"}))
      ->capture_default_str();
  app.add_option("--eta", o.eta, "Similarity threshold; candidates scoring >= eta are invalid")
      ->capture_default_str();
  app.add_option("--iterations", o.iterations, "Expansion rounds")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--max-in-flight", o.max_in_flight, "Concurrent fill calls")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_flag("--include-leading-gap", o.include_leading_gap, "Also fill the gap before the first step");
  app.add_option("--gap-retries", o.gap_retries, "Engine-level retries per gap on transport errors")
      ->capture_default_str();
  app.add_option("--seed", o.seed, "Seed forwarded to stochastic backends")->capture_default_str();
  app.add_option("--endpoint-url", o.endpoint_url, "http: completion endpoint");
  app.add_option("--auth-token-env", o.auth_token_env, "http: env var holding the bearer token");
  app.add_option("--timeout-ms", o.timeout_ms, "http: per-request timeout")->capture_default_str();
  app.add_option("--retry-limit", o.retry_limit, "http: retries on transport errors, 408, 429, 5xx")
      ->capture_default_str();
  app.add_option("--backoff-ms", o.backoff_ms, "http: base backoff, doubled per retry")->capture_default_str();
  app.add_option("--fixtures", o.fixtures, "replay: fixture JSONL {request_id, response}");
  app.add_option("--max-new-chars", o.max_new_chars, "http: completion byte cap")->capture_default_str();
  app.add_option("--max-tokens", o.max_tokens, "http: max_tokens sent on the wire")->capture_default_str();
  app.add_option("--temperature", o.temperature, "http: sampling temperature")->capture_default_str();
  app.add_option("--record-fixtures", o.record_fixtures, "Record every (request, response) pair to this fixture");
  app.add_flag("--timing", o.timing, "Include per-gap latencies in the report");
}

int run_expand(const ExpandOpts& o, std::ostream& err) {
  BackendConfig backend_cfg;
  backend_cfg.kind = parse_backend_kind(o.backend);
  backend_cfg.endpoint_url = o.endpoint_url;
  backend_cfg.auth_token_env = o.auth_token_env;
  backend_cfg.timeout_ms = o.timeout_ms;
  backend_cfg.retry_limit = o.retry_limit;
  backend_cfg.backoff_ms = o.backoff_ms;
  backend_cfg.fixture_path = o.fixtures;
  backend_cfg.max_new_chars = o.max_new_chars;
  backend_cfg.max_tokens = o.max_tokens;
  backend_cfg.temperature = o.temperature;
  backend_cfg.max_connections = o.max_in_flight;

  ExpansionConfig cfg;
  cfg.eta = o.eta;
  cfg.iterations = o.iterations;
  cfg.include_leading_gap = o.include_leading_gap;
  cfg.max_in_flight = o.max_in_flight;
  cfg.retry_limit = o.gap_retries;
  cfg.seed = o.seed;
  cfg.validate();

  json config = {{"input", o.input},
                 {"output", o.output},
                 {"report", o.report},
                 {"backend", o.backend},
                 {"eta", o.eta},
                 {"iterations", o.iterations},
                 {"max_in_flight", o.max_in_flight},
                 {"include_leading_gap", o.include_leading_gap},
                 {"gap_retries", o.gap_retries},
                 {"seed", o.seed},
                 {"record_fixtures", o.record_fixtures},
                 {"timing", o.timing}};
  if (backend_cfg.kind == BackendKind::Http) {
    config["endpoint_url"] = o.endpoint_url;
    config["auth_token_env"] = o.auth_token_env;
    config["timeout_ms"] = o.timeout_ms;
    config["retry_limit"] = o.retry_limit;
    config["backoff_ms"] = o.backoff_ms;
    config["max_new_chars"] = o.max_new_chars;
    config["max_tokens"] = o.max_tokens;
    config["temperature"] = o.temperature;
  }
  if (backend_cfg.kind == BackendKind::Replay) config["fixtures"] = o.fixtures;
  event(err, "config", {{"subcommand", "expand"}, {"config", config}});

  const auto records = read_chain_records(o.input);
  auto backend = make_backend(backend_cfg);

  JsonlWriter out(o.output);
  std::unique_ptr<JsonlWriter> report;
  if (!o.report.empty()) report = std::make_unique<JsonlWriter>(o.report);
  std::unique_ptr<FixtureWriter> recorder;
  if (!o.record_fixtures.empty()) recorder = std::make_unique<FixtureWriter>(o.record_fixtures);

  const auto started = std::chrono::steady_clock::now();
  std::size_t emitted = 0;
  const auto agg = expand_dataset(
      records, *backend, cfg,
      [&](RecordOutcome& outcome) {
        out.write(to_jsonl(outcome.record));
        if (report) report->write(report_jsonl(outcome, o.timing));
        if (recorder) {
          for (const auto& ex : outcome.exchanges) recorder->record(ex.request.request_id, ex.raw_response);
        }
        if (!outcome.error.empty()) {
          event(err, "record_failed", {{"id", outcome.record.id}, {"error", outcome.error}});
        }
        if (++emitted % 1000 == 0) event(err, "progress", {{"records", emitted}});
      },
      recorder != nullptr);
  out.flush();
  if (report) report->flush();
  write_provenance(sidecar(o.output), "expand", config);

  json summary = json::parse(to_json(agg));
  summary["subcommand"] = "expand";
  summary["elapsed_ms"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  event(err, "done", summary);

  if (backend_cfg.kind == BackendKind::Http && agg.attempted > 0 && agg.transport_failures == agg.attempted) {
    event(err, "backend_unreachable", {{"endpoint_url", o.endpoint_url}});
    return kExitBackendUnreachable;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- gen-synth

struct GenSynthOpts {
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string drop = "every-other";
  std::string out;
  std::size_t ops_min = 2;
  std::size_t ops_max = 4;
  std::int64_t operand_min = 1;
  std::int64_t operand_max = 20;
  std::string operators = "+-*";
  double separation_eta = 0.8;
};

void add_gen_synth(CLI::App& app, GenSynthOpts& o) {
  app.add_option("--count", o.count, "Number of problems")->required();
  app.add_option("--seed", o.seed, "Generator seed")->required();
  app.add_option("--drop", o.drop, "every-other | random-k:K")->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->required();
  app.add_option("--ops-min", o.ops_min, "Minimum operations per problem")->capture_default_str();
  app.add_option("--ops-max", o.ops_max, "Maximum operations per problem")->capture_default_str();
  app.add_option("--operand-min", o.operand_min, "Smallest operand")->capture_default_str();
  app.add_option("--operand-max", o.operand_max, "Largest operand")->capture_default_str();
  app.add_option("--operators", o.operators, "Subset of +-*")->capture_default_str();
  app.add_option("--separation-eta", o.separation_eta,
                 "Redraw problems until each dropped step scores below this against its successor")
      ->capture_default_str();
}

int run_gen_synth(const GenSynthOpts& o, std::ostream& err) {
  CorpusSpec spec;
  spec.count = o.count;
  spec.seed = o.seed;
  spec.drop = DropPattern::parse(o.drop);
  spec.ops_min = o.ops_min;
  spec.ops_max = o.ops_max;
  spec.operand_min = o.operand_min;
  spec.operand_max = o.operand_max;
  spec.operators = o.operators;
  spec.separation_eta = o.separation_eta;
  spec.validate();

  json config = {{"count", o.count},       {"seed", o.seed},         {"drop", spec.drop.to_string()},
                 {"out", o.out},           {"ops_min", o.ops_min},   {"ops_max", o.ops_max},
                 {"operand_min", o.operand_min}, {"operand_max", o.operand_max}, {"operators", o.operators},
                 {"separation_eta", o.separation_eta}};
  event(err, "config", {{"subcommand", "gen-synth"}, {"config", config}});

  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw Error(Errc::Io, "cannot create " + o.out + ": " + ec.message());

  const auto problems = generate(spec);
  const fs::path dir(o.out);
  JsonlWriter coarse(dir / "coarse.jsonl");
  JsonlWriter fine(dir / "fine.jsonl");
  JsonlWriter dropped(dir / "dropped.jsonl");
  for (const auto& p : problems) {
    coarse.write(to_jsonl(coarse_record(p)));
    fine.write(to_jsonl(fine_record(p)));
    dropped.write(dropped_jsonl(p));
  }
  coarse.flush();
  fine.flush();
  dropped.flush();
  write_provenance(dir / "config.json", "gen-synth", config);
  event(err, "done", {{"subcommand", "gen-synth"}, {"problems", problems.size()}});
  return kExitOk;
}

// ---------------------------------------------------------------- stats / compare

struct StatsOpts {
  std::string input;
  std::string tokenizer = "whitespace";
  std::string output;
};

void add_stats(CLI::App& app, StatsOpts& o) {
  app.add_option("--input", o.input, "Chain JSONL")->required();
  app.add_option("--tokenizer", o.tokenizer, "whitespace | chars")->capture_default_str();
  app.add_option("--output", o.output, "Also write the stats JSON here");
}

int run_stats(const StatsOpts& o, std::ostream& out, std::ostream& err) {
  json config = {{"input", o.input}, {"tokenizer", o.tokenizer}, {"output", o.output}};
  event(err, "config", {{"subcommand", "stats"}, {"config", config}});
  const auto counter = make_token_counter(o.tokenizer);
  const auto text = to_json(stats_from_file(o.input, *counter));
  out << text << '\n';
  if (!o.output.empty()) {
    write_text_file(o.output, text + "\n");
    write_provenance(sidecar(o.output), "stats", config);
  }
  return kExitOk;
}

struct CompareOpts {
  std::string before;
  std::string after;
};

void add_compare(CLI::App& app, CompareOpts& o) {
  app.add_option("--before", o.before, "Stats JSON before expansion")->required();
  app.add_option("--after", o.after, "Stats JSON after expansion")->required();
}

int run_compare(const CompareOpts& o, std::ostream& out, std::ostream& err) {
  event(err, "config", {{"subcommand", "compare"}, {"config", {{"before", o.before}, {"after", o.after}}}});
  const auto before = parse_corpus_stats(read_text_file(o.before));
  const auto after = parse_corpus_stats(read_text_file(o.after));
  out << to_json(diff_stats(before, after)) << '\n';
  return kExitOk;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::InvalidConfig:
    case Errc::SpecError: return kExitUsage;
    default: return kExitIo;
  }
}

// Order: subcommand, config-file tokens, explicit flags; reversed for CLI11.
// Options take the last value given, so explicit flags win.
std::vector<std::string> expand_config(std::span<const std::string> args) {
  std::vector<std::string> head;
  std::vector<std::string> from_file;
  std::vector<std::string> tail;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config", 1, 0);
      auto tokens = config_file_tokens(args[++i]);
      from_file.insert(from_file.end(), tokens.begin(), tokens.end());
    } else if (a.rfind("--config=", 0) == 0) {
      auto tokens = config_file_tokens(a.substr(9));
      from_file.insert(from_file.end(), tokens.begin(), tokens.end());
    } else if (head.empty() && a.rfind("-", 0) != 0) {
      head.push_back(a);
    } else {
      tail.push_back(a);
    }
  }
  std::vector<std::string> merged = head;
  merged.insert(merged.end(), from_file.begin(), from_file.end());
  merged.insert(merged.end(), tail.begin(), tail.end());
  std::reverse(merged.begin(), merged.end());
  return merged;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"stepfill: FIM sample construction and similarity-gated step expansion for CoT corpora", "stepfill"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", kVersion);
  app.add_option("--config", "Flat key = value file of flag defaults; explicit flags win");

  DecomposeOpts decompose_opts;
  BuildFimOpts build_fim_opts;
  ExpandOpts expand_opts;
  GenSynthOpts gen_synth_opts;
  StatsOpts stats_opts;
  CompareOpts compare_opts;

  auto* decompose_cmd = app.add_subcommand("decompose", "Split solutions into step chains");
  auto* build_fim_cmd = app.add_subcommand("build-fim", "Draw PSM fill-in-the-middle samples from chains");
  auto* expand_cmd = app.add_subcommand("expand", "Insert gated backend proposals between steps");
  auto* gen_synth_cmd = app.add_subcommand("gen-synth", "Generate a synthetic arithmetic corpus with ground truth");
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics for a chain file");
  auto* compare_cmd = app.add_subcommand("compare", "Percentage deltas between two stats files");
  for (auto* cmd : {decompose_cmd, build_fim_cmd, expand_cmd, gen_synth_cmd, stats_cmd, compare_cmd}) {
    cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
  add_decompose(*decompose_cmd, decompose_opts);
  add_build_fim(*build_fim_cmd, build_fim_opts);
  add_expand(*expand_cmd, expand_opts);
  add_gen_synth(*gen_synth_cmd, gen_synth_opts);
  add_stats(*stats_cmd, stats_opts);
  add_compare(*compare_cmd, compare_opts);

  try {
    auto argv = expand_config(args);
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    event(err, "error", {{"error_code", to_string(e.code())}, {"error", e.what()}});
    return exit_code_for(e.code()) == kExitIo ? kExitIo : kExitUsage;
  }

  try {
    if (*decompose_cmd) return run_decompose(decompose_opts, err);
    if (*build_fim_cmd) return run_build_fim(build_fim_opts, err);
    if (*expand_cmd) return run_expand(expand_opts, err);
    if (*gen_synth_cmd) return run_gen_synth(gen_synth_opts, err);
    if (*stats_cmd) return run_stats(stats_opts, out, err);
    if (*compare_cmd) return run_compare(compare_opts, out, err);
  } catch (const Error& e) {
    event(err, "error", {{"error_code", to_string(e.code())}, {"error", e.what()}});
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    event(err, "error", {{"error", e.what()}});
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace stepfill::cli

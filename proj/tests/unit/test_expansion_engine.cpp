#include <doctest.h>

#include <atomic>
#include <mutex>

#include "stepfill/expansion_engine.hpp"
#include "stepfill/rng.hpp"
#include "stepfill/synthetic_corpus.hpp"
#include "stepfill/thread_pool.hpp"
#include "support.hpp"

using namespace stepfill;

namespace {

const std::string kQuestion = "Compute the value of ((2 + 3) * 4) - 5.";

StepChain coarse() { return StepChain::from_texts({"Compute 2 + 3 = 5.", "Compute 20 - 5 = 15.", "The answer is 15."}); }

// Answers every gap with pseudo-random letters keyed by the request.
class TaggingBackend final : public FimBackend {
 public:
  std::string fill(const FimRequest& r) override {
    ++calls;
    auto rng = keyed_stream(0, r.request_id, 0);
    std::string text;
    for (int i = 0; i < 16; ++i) text += static_cast<char>('a' + rng.below(26));
    return text;
  }
  std::string_view name() const noexcept override { return "tagging"; }
  std::atomic<int> calls{0};
};

class ConstantBackend final : public FimBackend {
 public:
  explicit ConstantBackend(std::string text) : text_(std::move(text)) {}
  std::string fill(const FimRequest&) override { return text_; }
  std::string_view name() const noexcept override { return "constant"; }

 private:
  std::string text_;
};

// Fails the first `failures` calls with the given code.
class FlakyBackend final : public FimBackend {
 public:
  FlakyBackend(Errc code, int failures) : code_(code), failures_(failures) {}
  std::string fill(const FimRequest&) override {
    if (calls++ < failures_) throw Error(code_, "flaky");
    return "Recovered text here.";
  }
  std::string_view name() const noexcept override { return "flaky"; }
  std::atomic<int> calls{0};

 private:
  Errc code_;
  int failures_;
};

}  // namespace

TEST_CASE("candidate cleanup") {
  CHECK(clean_candidate("  Compute 5 * 4 = 20.\n<|fim_prefix|>junk") == "Compute 5 * 4 = 20.");
  CHECK(clean_candidate("<|fim_middle|>") == "");
  CHECK(is_malformed_candidate("step <|fim_mid"));
  CHECK(is_malformed_candidate("bad \xff byte"));
  CHECK_FALSE(is_malformed_candidate("fine"));
}

TEST_CASE("gap requests carry the full tail") {
  const auto r = gap_request(kQuestion, coarse(), 2);
  CHECK(r.prefix_steps == std::vector<std::string>{"Compute 2 + 3 = 5."});
  CHECK(r.suffix_steps == std::vector<std::string>{"Compute 20 - 5 = 15.", "The answer is 15."});
  const auto lead = gap_request(kQuestion, coarse(), 1);
  CHECK(lead.prefix_steps.empty());
  CHECK(lead.suffix_steps.size() == 3);
  CHECK_ERRC(gap_request(kQuestion, coarse(), 4), Errc::InvalidConfig);
}

TEST_CASE("oracle reconstructs the dropped step") {
  OracleBackend oracle;
  const auto result = expand_chain(kQuestion, coarse(), oracle, ExpansionConfig{});
  CHECK(result.chain.texts() == std::vector<std::string>{"Compute 2 + 3 = 5.", "Compute 5 * 4 = 20.",
                                                         "Compute 20 - 5 = 15.", "The answer is 15."});
  CHECK(result.report.attempted == 2);
  CHECK(result.report.inserted == 1);
  CHECK(result.report.invalid == 1);
  REQUIRE(result.report.gaps.size() == 2);
  CHECK(result.report.gaps[0].gap_index == 2);
  CHECK(result.report.gaps[0].decision == GapDecision::Valid);
  CHECK(result.report.gaps[1].similarity_to_next.value == 1.0);
}

TEST_CASE("all-invalid leaves the chain unchanged") {
  ConstantBackend empty("");
  const auto result = expand_chain(kQuestion, coarse(), empty, ExpansionConfig{});
  CHECK(result.chain == coarse());
  CHECK(result.report.invalid == 2);
}

TEST_CASE("five steps, all valid, gives nine") {
  TaggingBackend tags;
  const auto chain = StepChain::from_texts({"Alpha one.", "Beta two.", "Gamma three.", "Delta four.", "Epsilon five."});
  const auto result = expand_chain("Q", chain, tags, ExpansionConfig{});
  CHECK(result.chain.size() == 9);
  CHECK(result.chain.steps[1].text == tags.fill(gap_request("Q", chain, 2)));
  CHECK(result.chain.steps[0].text == "Alpha one.");
  CHECK(result.chain.steps[8].text == "Epsilon five.");

  ExpansionConfig lead;
  lead.include_leading_gap = true;
  const auto with_lead = expand_chain("Q", chain, tags, lead);
  CHECK(with_lead.chain.size() == 10);
  CHECK(with_lead.chain.steps[0].text == tags.fill(gap_request("Q", chain, 1)));
}

TEST_CASE("single-step chains") {
  TaggingBackend tags;
  const auto one = StepChain::from_texts({"Only step."});
  CHECK(expand_chain("Q", one, tags, ExpansionConfig{}).chain == one);
  CHECK(tags.calls == 0);
  ExpansionConfig lead;
  lead.include_leading_gap = true;
  CHECK(expand_chain("Q", one, tags, lead).chain.size() == 2);
}

TEST_CASE("malformed and errored gaps insert nothing") {
  ConstantBackend partial("Compute <|fim_mi");
  const auto m = expand_chain(kQuestion, coarse(), partial, ExpansionConfig{});
  CHECK(m.chain == coarse());
  CHECK(m.report.malformed == 2);

  ReplayBackend none(std::unordered_map<std::string, std::string>{});
  const auto e = expand_chain(kQuestion, coarse(), none, ExpansionConfig{});
  CHECK(e.chain == coarse());
  CHECK(e.report.errored == 2);
  CHECK(e.report.gaps[0].error_code == "FixtureMiss");
  CHECK(e.report.gaps[0].attempts == 1);
}

TEST_CASE("engine retries only transport failures") {
  ExpansionConfig cfg;
  cfg.retry_limit = 2;
  const auto one_gap = StepChain::from_texts({"First line here.", "Second line here."});

  FlakyBackend transient(Errc::TransportError, 2);
  const auto ok = expand_chain("Q", one_gap, transient, cfg);
  CHECK(ok.report.inserted == 1);
  CHECK(ok.report.gaps[0].attempts == 3);
  CHECK(ok.report.gaps[0].error.empty());

  FlakyBackend hopeless(Errc::Timeout, 10);
  const auto bad = expand_chain("Q", one_gap, hopeless, cfg);
  CHECK(bad.report.errored == 1);
  CHECK(hopeless.calls == 3);
  CHECK(bad.report.gaps[0].error_code == "Timeout");

  FlakyBackend deterministic(Errc::FixtureMiss, 10);
  (void)expand_chain("Q", one_gap, deterministic, cfg);
  CHECK(deterministic.calls == 1);
}

TEST_CASE("iteration doubles the gaps") {
  TaggingBackend tags;
  ExpansionConfig cfg;
  cfg.iterations = 2;
  const auto chain = StepChain::from_texts({"Alpha one.", "Beta two.", "Gamma three."});
  const auto result = expand_iteratively("Q", chain, tags, cfg);
  REQUIRE(result.rounds.size() == 2);
  CHECK(result.rounds[0].output_steps == 5);
  CHECK(result.rounds[1].attempted == 4);
  CHECK(result.rounds[1].input_steps == 5);
  CHECK(result.chain.size() == 9);
}

TEST_CASE("fine chains are a fixed point") {
  CorpusSpec spec;
  spec.count = 20;
  spec.seed = 3;
  OracleBackend oracle;
  ExpansionConfig cfg;
  cfg.iterations = 3;
  for (const auto& p : generate(spec)) {
    const auto result = expand_iteratively(p.question, p.fine_chain, oracle, cfg);
    CHECK(result.chain == p.fine_chain);
    for (const auto& r : result.rounds) CHECK(r.inserted == 0);
  }
}

TEST_CASE("pooled expansion matches sequential") {
  TaggingBackend tags;
  ThreadPool pool(4);
  std::vector<std::string> texts;
  for (int i = 0; i < 12; ++i) texts.push_back("Step text number " + std::to_string(i) + ".");
  const auto chain = StepChain::from_texts(texts);
  std::vector<Exchange> seq_ex, par_ex;
  const auto seq = expand_chain("Q", chain, tags, ExpansionConfig{}, nullptr, &seq_ex);
  const auto par = expand_chain("Q", chain, tags, ExpansionConfig{}, &pool, &par_ex);
  CHECK(seq.chain == par.chain);
  REQUIRE(seq_ex.size() == par_ex.size());
  for (std::size_t i = 0; i < seq_ex.size(); ++i) CHECK(seq_ex[i].request.request_id == par_ex[i].request.request_id);
}

TEST_CASE("expand_dataset keeps input order and sums counts") {
  CorpusSpec spec;
  spec.count = 60;
  spec.seed = 11;
  const auto problems = generate(spec);
  std::vector<ChainRecord> records;
  for (const auto& p : problems) records.push_back(coarse_record(p));
  records.push_back(ChainRecord{"not-synthetic", "Why?", StepChain::from_texts({"One thing.", "Other thing."})});

  OracleBackend oracle;
  for (std::size_t in_flight : {1u, 2u, 8u}) {
    ExpansionConfig cfg;
    cfg.max_in_flight = in_flight;
    std::vector<std::string> ids;
    std::size_t attempted = 0, inserted = 0;
    const auto agg = expand_dataset(records, oracle, cfg, [&](RecordOutcome& o) {
      ids.push_back(o.record.id);
      for (const auto& r : o.rounds) {
        attempted += r.attempted;
        inserted += r.inserted;
      }
    });
    REQUIRE(ids.size() == records.size());
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK(ids[i] == records[i].id);
    CHECK(agg.records == records.size());
    CHECK(agg.attempted == attempted);
    CHECK(agg.inserted == inserted);
    CHECK(agg.errored == 1);
    CHECK(agg.failed_records == 0);
  }
}

TEST_CASE("expand_dataset on an empty corpus") {
  OracleBackend oracle;
  int calls = 0;
  const auto agg = expand_dataset({}, oracle, ExpansionConfig{}, [&](RecordOutcome&) { ++calls; });
  CHECK(calls == 0);
  CHECK(agg.records == 0);
  CHECK(agg.attempted == 0);
}

TEST_CASE("report lines are stable without timing") {
  OracleBackend oracle;
  const std::vector<ChainRecord> records{{"r", kQuestion, coarse()}};
  std::vector<std::string> lines;
  for (int run = 0; run < 2; ++run) {
    (void)expand_dataset(records, oracle, ExpansionConfig{},
                         [&](RecordOutcome& o) { lines.push_back(report_jsonl(o, false)); });
  }
  CHECK(lines[0] == lines[1]);
  CHECK(lines[0].find("latency") == std::string::npos);
}

TEST_CASE("config validation") {
  ExpansionConfig cfg;
  cfg.iterations = 0;
  CHECK_ERRC(cfg.validate(), Errc::InvalidConfig);
  cfg = {};
  cfg.max_in_flight = 0;
  CHECK_ERRC(cfg.validate(), Errc::InvalidConfig);
  cfg = {};
  cfg.eta = 0;
  CHECK_ERRC(cfg.validate(), Errc::InvalidConfig);
}

#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "htp/corpus.hpp"
#include "htp/error.hpp"
#include "htp/hypotest.hpp"
#include "support/files.hpp"
#include "support/oracles.hpp"

using namespace htp;

namespace {

std::string dump(const Corpus& c) {
  std::ostringstream out;
  write_canonical(c, out);
  return out.str();
}

Example t2_example() {
  Example e;
  e.id = "t2-blue-bob";
  e.bucket = 0;
  e.assumption = WorldAssumption::OWA;
  e.theory = parse_theory("Alan is big.\nBob is not blue.\nIf someone is big then they are round.\n");
  e.conclusion = attribute("blue", "bob");
  e.gold_label = TruthValue::False;
  e.gold_depth = 0;
  return e;
}

GeneratorSpec spec_with(WorldAssumption wa, std::uint64_t seed) {
  GeneratorSpec s;
  s.assumption = wa;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("Rng is in range and deterministic") {
  Rng a(3), b(3);
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t x = a.below(7);
    CHECK(x < 7);
    CHECK(x == b.below(7));
  }
  // Fixed stream: mt19937_64's output is specified by the standard.
  Rng c(5489);
  std::uint64_t last = 0;
  for (int i = 0; i < 10000; ++i) last = c.next();
  CHECK(last == 9981545732273789042ULL);
}

TEST_CASE("buckets") {
  CHECK(bucket_for_depth(0) == 0);
  CHECK(bucket_for_depth(2) == 2);
  CHECK(bucket_for_depth(4) == 5);
  CHECK_THROWS_AS(bucket_for_depth(7), RangeError);
  CHECK(parse_bucket("d5") == 5);
  CHECK_THROWS_AS(parse_bucket("d4"), UsageError);
}

TEST_CASE("canonical record golden and round trip") {
  Example e = t2_example();
  std::string record = to_record(e);
  CHECK(matches_golden("corpus_record.jsonl", record + "\n"));
  CHECK(from_record(record) == e);
  CHECK(certify(e).empty());
}

TEST_CASE("load_canonical") {
  Example a = t2_example();
  Example b = t2_example();
  b.id = "t2-round-bob";
  b.conclusion = attribute("round", "bob");
  b.gold_label = TruthValue::Unknown;
  b.gold_depth.reset();
  {
    std::istringstream in(to_record(a) + "\n" + to_record(b) + "\n");
    CHECK(read_canonical(in).examples.size() == 2);
  }
  {
    Example wrong = b;
    wrong.gold_label = TruthValue::True;
    std::istringstream in(to_record(a) + "\n" + to_record(wrong) + "\n");
    try {
      read_canonical(in);
      FAIL("expected certification error");
    } catch (const CertificationError& err) {
      CHECK(err.ids() == std::vector<std::string>{"t2-round-bob"});
    }
  }
  {
    std::string lines;
    for (int i = 0; i < 4; ++i) {
      Example x = a;
      x.id = "x" + std::to_string(i);
      lines += to_record(x) + "\n";
    }
    lines += "{\"id\": \"broken\"\n";
    std::istringstream in(lines);
    try {
      read_canonical(in);
      FAIL("expected format error");
    } catch (const FormatError& err) {
      CHECK(err.line() == 5);
    }
  }
  {
    std::istringstream in(to_record(a) + "\n" + to_record(a) + "\n");
    CHECK_THROWS_AS(read_canonical(in), FormatError);  // duplicate id
  }
  {
    std::string bad_lf = to_record(a);
    bad_lf.replace(bad_lf.find("\"blue\",null"), 11, "\"red\",null");
    std::istringstream in(bad_lf + "\n");
    CHECK_THROWS_AS(read_canonical(in), FormatError);
  }
}

TEST_CASE("generate small CWA spec") {
  GeneratorSpec s = spec_with(WorldAssumption::CWA, 1);
  s.entities = 2;
  s.attributes = 3;
  s.depth_quota = {{0, 1}, {1, 1}};
  Corpus c = generate(s);
  REQUIRE(c.examples.size() == 2);
  CHECK(c.examples[0].gold_depth == 0);
  CHECK(c.examples[1].gold_depth == 1);
  for (const auto& e : c.examples) CHECK(certify(e).empty());
  CHECK(dump(generate(s)) == dump(c));
  CHECK(c.examples[0].id == "gen-000001");
}

TEST_CASE("generator spec validation") {
  GeneratorSpec s = spec_with(WorldAssumption::CWA, 1);
  s.unknown_quota = {{2, 1}};
  CHECK_THROWS_AS(generate(s), UsageError);
  GeneratorSpec o = spec_with(WorldAssumption::OWA, 1);
  o.failure_quota = {{0, 1}};
  CHECK_THROWS_AS(generate(o), UsageError);
  GeneratorSpec deep = spec_with(WorldAssumption::OWA, 1);
  deep.depth_quota = {{6, 1}};
  CHECK_THROWS_AS(generate(deep), UsageError);
  GeneratorSpec narrow = spec_with(WorldAssumption::OWA, 1);
  narrow.attributes = 3;
  narrow.depth_quota = {{5, 1}};
  CHECK_THROWS_AS(generate(narrow), UsageError);
}

TEST_CASE("generated depths equal brute-force minimal depths") {
  int checked = 0;
  std::map<int, int> per_depth;
  for (int round = 0; round < 8; ++round) {
    GeneratorSpec s = spec_with(round % 2 ? WorldAssumption::OWA : WorldAssumption::CWA,
                                1000 + static_cast<std::uint64_t>(round));
    s.allow_negation = round % 4 < 2;
    s.entities = 1 + round % 8;
    s.depth_quota = {{0, 10}, {1, 10}, {2, 10}, {3, 10}, {4, 5}, {5, 10}};
    if (s.assumption == WorldAssumption::OWA) {
      s.unknown_quota = {{0, 3}, {5, 3}};
    } else {
      s.failure_quota = {{1, 4}};
    }
    Corpus c = generate(s);
    for (const auto& e : c.examples) {
      oracle::NaiveModel m = oracle::naive_model(e.theory, e.assumption);
      REQUIRE(m.stratified);
      REQUIRE(m.consistent);
      CHECK(oracle::naive_verdict(m, e.assumption, e.conclusion) == e.gold_label);
      std::optional<int> depth;
      if (m.has(e.conclusion)) depth = m.depth.at(e.conclusion);
      else if (m.has(e.conclusion.complement())) depth = m.depth.at(e.conclusion.complement());
      CHECK(depth == e.gold_depth);
      if (e.gold_depth) {
        ++per_depth[*e.gold_depth];
        CHECK(e.bucket == bucket_for_depth(*e.gold_depth));
      }
      if (e.assumption == WorldAssumption::CWA) CHECK(e.gold_label != TruthValue::Unknown);
      ++checked;
    }
  }
  CHECK(checked > 400);
  for (int d = 0; d <= 5; ++d) CHECK(per_depth[d] > 0);
}

TEST_CASE("labels are balanced within each depth") {
  GeneratorSpec s = spec_with(WorldAssumption::OWA, 9);
  s.depth_quota = {{3, 10}};
  s.unknown_quota = {{3, 5}};
  Corpus c = generate(s);
  std::map<TruthValue, int> labels;
  for (const auto& e : c.examples) ++labels[e.gold_label];
  CHECK(labels[TruthValue::True] == 5);
  CHECK(labels[TruthValue::False] == 5);
  CHECK(labels[TruthValue::Unknown] == 5);
  CHECK(c.bucket == 3);
}

TEST_CASE("statements round-trip through render and parse") {
  Rng rng(2024);
  int statements = 0;
  for (int i = 0; statements < 10000; ++i) {
    GeneratorSpec s = spec_with(i % 2 ? WorldAssumption::OWA : WorldAssumption::CWA, 0);
    s.relations = 1 + i % 6;
    s.max_antecedents = 1 + i % 4;
    s.rules = 8;
    Theory t = random_theory(s, rng);
    for (const auto& f : t.facts) {
      Fact back = std::get<Fact>(parse_statement(render_statement(f)));
      REQUIRE_MESSAGE(back.literal == f.literal, render_statement(f));
      ++statements;
    }
    for (const auto& r : t.rules) {
      Rule back = std::get<Rule>(parse_statement(render_statement(r)));
      back.id = r.id;
      REQUIRE_MESSAGE(back == r, render_statement(r));
      ++statements;
    }
  }
  CHECK(statements >= 10000);
}

TEST_CASE("bucket_by_depth partitions the corpus") {
  GeneratorSpec s = spec_with(WorldAssumption::OWA, 5);
  s.depth_quota = {{0, 3}, {2, 3}, {4, 3}};
  s.unknown_quota = {{1, 2}};
  Corpus c = generate(s);
  auto buckets = bucket_by_depth(c);
  std::size_t total = 0;
  std::set<std::string> ids;
  for (const auto& [b, sub] : buckets) {
    total += sub.examples.size();
    for (const auto& e : sub.examples) {
      ids.insert(e.id);
      if (e.gold_depth) CHECK(b == bucket_for_depth(*e.gold_depth));
      else CHECK(b == e.bucket);
    }
  }
  CHECK(total == c.examples.size());
  CHECK(ids.size() == c.examples.size());
  CHECK(buckets.at(5).examples.size() == 3);  // depth 4 lands in d5
  CHECK(buckets.at(1).examples.size() == 2);

  Corpus deep = c;
  deep.examples[0].gold_depth = 7;
  CHECK_THROWS_AS(bucket_by_depth(deep), RangeError);
}

TEST_CASE("sample") {
  GeneratorSpec s = spec_with(WorldAssumption::OWA, 11);
  s.depth_quota = {{0, 60}, {1, 40}};
  Corpus c = generate(s);
  CHECK(dump(sample(c, 100, 1)) == dump(c));
  CHECK(dump(sample(c, 30, 42)) == dump(sample(c, 30, 42)));
  CHECK(sample(c, 0, 3).examples.empty());
  CHECK_THROWS_AS(sample(c, 101, 3), UsageError);
  Corpus sub = sample(c, 30, 42);
  CHECK(std::is_sorted(sub.examples.begin(), sub.examples.end(),
                       [](const Example& a, const Example& b) { return a.id < b.id; }));
  // Every position is picked about equally often.
  std::vector<int> hits(c.examples.size());
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    for (const auto& e : sample(c, 10, seed).examples) {
      ++hits[static_cast<std::size_t>(std::stoi(e.id.substr(4)) - 1)];
    }
  }
  for (int h : hits) {
    CHECK(h > 120);
    CHECK(h < 290);
  }
}

TEST_CASE("adapt ProofWriter records") {
  Adapted a = adapt_upstream(fixture_path("upstream/proofwriter-owa-d5-test.jsonl"),
                             Dialect::ProofWriter);
  CHECK(a.report.records == 2);
  CHECK(a.report.questions == 8);
  CHECK(a.report.kept == 6);
  REQUIRE(a.report.skipped.size() == 1);
  CHECK(a.report.skipped[0].first == "RelNeg-OWA-D5-101-Q6");
  REQUIRE(a.report.disagreements.size() == 1);
  CHECK(a.report.disagreements[0].first == "RelNeg-OWA-D5-101-Q5");
  REQUIRE(a.report.depth_mismatches.size() == 1);
  CHECK(a.report.depth_mismatches[0].first == "AttNoneg-OWA-D5-7-Q1");
  CHECK(a.corpus.bucket == 5);
  for (const auto& e : a.corpus.examples) {
    CHECK(e.assumption == WorldAssumption::OWA);
    CHECK(e.split == Split::Test);
    CHECK(certify(e).empty());
  }
  const Example* cat = a.corpus.find("RelNeg-OWA-D5-101-Q4");
  REQUIRE(cat);
  CHECK(cat->conclusion == relation("like", "bob", "cat"));
  CHECK(cat->gold_label == TruthValue::Unknown);
  CHECK(cat->theory.find_fact("F3")->literal == relation("chase", "bob", "cat"));
  const Example* blue = a.corpus.find("RelNeg-OWA-D5-101-Q1");
  REQUIRE(blue);
  CHECK(blue->gold_depth == 2);
}

TEST_CASE("adapt RuleTaker records") {
  Adapted a = adapt_upstream(fixture_path("upstream/depth-2/test.jsonl"), Dialect::RuleTaker);
  CHECK(a.report.kept == 4);
  REQUIRE(a.report.skipped.size() == 1);
  CHECK(a.report.skipped[0].first == "AttNeg-D2-2-1");
  REQUIRE(a.report.disagreements.size() == 1);
  CHECK(a.report.disagreements[0].first == "AttNeg-D2-3-1");
  CHECK(a.corpus.bucket == 2);
  for (const auto& e : a.corpus.examples) {
    CHECK(e.assumption == WorldAssumption::CWA);
    CHECK(certify(e).empty());
  }
  CHECK(a.corpus.find("AttNeg-D2-1-1")->gold_depth == 2);
  CHECK_FALSE(a.corpus.find("AttNeg-D2-1-2")->gold_depth);
}

TEST_CASE("adapter errors name the field") {
  std::istringstream missing(R"({"id": "X-D1-1", "context": "Anne is big."})" "\n");
  try {
    adapt_upstream(missing, Dialect::RuleTaker, "test.jsonl");
    FAIL("expected adapter error");
  } catch (const AdapterError& e) {
    CHECK(e.field_path() == "line 1.questions");
  }
  std::istringstream no_bucket(
      R"({"id": "X", "context": "Anne is big.", "questions": [{"text": "Anne is big.", "label": true}]})"
      "\n");
  CHECK_THROWS_AS(adapt_upstream(no_bucket, Dialect::RuleTaker, "test.jsonl"), AdapterError);
  std::istringstream bad_label(
      R"({"id": "X-D0-1", "context": "Anne is big.", "questions": [{"text": "Anne is big.", "label": "maybe"}]})"
      "\n");
  try {
    adapt_upstream(bad_label, Dialect::RuleTaker, "test.jsonl");
    FAIL("expected adapter error");
  } catch (const AdapterError& e) {
    CHECK(e.field_path() == "line 1.questions[0].label");
  }
}

TEST_CASE("generated corpora pass hypothesis testing at every depth") {
  for (WorldAssumption wa : {WorldAssumption::CWA, WorldAssumption::OWA}) {
    GeneratorSpec s = spec_with(wa, 77);
    s.depth_quota = {{0, 20}, {1, 20}, {2, 20}, {3, 20}, {4, 20}, {5, 20}};
    for (const auto& e : generate(s).examples) {
      HTrace t = hypothesis_test(e.theory, e.conclusion, e.assumption);
      CHECK(t.verdict == e.gold_label);
      CHECK(verify_trace(e.theory, t, t.verdict, e.assumption).accepted);
    }
  }
}

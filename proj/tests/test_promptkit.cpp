#include <random>

#include "doctest.h"
#include "htp/error.hpp"
#include "htp/promptkit.hpp"
#include "support/files.hpp"
#include "support/oracles.hpp"

using namespace htp;

namespace {

const char* kT1 =
    "Alan is big.\n"
    "If someone is big then they are round.\n"
    "If someone is round then they are blue.\n";

const char* kT2 =
    "Alan is big.\n"
    "Bob is not blue.\n"
    "If someone is big then they are round.\n";

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

Prompt sample_prompt(PromptStyle style) {
  Theory t1 = parse_theory(kT1);
  Theory t2 = parse_theory(kT2);
  Prompt p;
  p.style = style;
  p.exemplars.push_back(build_exemplar(t1, attribute("blue", "alan"), WorldAssumption::OWA, style));
  p.exemplars.push_back(build_exemplar(t2, attribute("blue", "bob"), WorldAssumption::OWA, style));
  p.exemplars.push_back(build_exemplar(t2, attribute("round", "bob"), WorldAssumption::OWA, style));
  p.target_question = question_text(t1, attribute("round", "alan", Polarity::Negative));
  return p;
}

}  // namespace

TEST_CASE("question text") {
  Theory t1 = parse_theory(kT1);
  CHECK(question_text(t1, attribute("blue", "alan")) ==
        "Judge the following conclusion 'Alan is blue.' is true, false, or unknown, based on the "
        "following facts and rules: Alan is big. If someone is big then they are round. If "
        "someone is round then they are blue.");
  ParsedQuestion q = parse_question(question_text(t1, attribute("blue", "alan")));
  CHECK(q.theory == t1);
  CHECK(q.conclusion == attribute("blue", "alan"));
  CHECK_THROWS_AS(parse_question("Is Alan blue?"), ParseError);
}

TEST_CASE("build_exemplar per style") {
  Theory t1 = parse_theory(kT1);
  Exemplar standard = build_exemplar(t1, attribute("blue", "alan"), WorldAssumption::CWA,
                                     PromptStyle::Standard);
  CHECK_FALSE(standard.rationale);
  CHECK(standard.answer == TruthValue::True);

  Exemplar cot = build_exemplar(t1, attribute("blue", "alan"), WorldAssumption::CWA, PromptStyle::CoT);
  REQUIRE(cot.rationale);
  const std::string& r = *cot.rationale;
  auto f1 = r.find("\"Alan is big.\" is given.");
  auto r1 = r.find("If someone is big then they are round.");
  auto r2 = r.find("If someone is round then they are blue.");
  CHECK(f1 != std::string::npos);
  CHECK(f1 < r1);
  CHECK(r1 < r2);
  CHECK(r2 != std::string::npos);

  Theory t2 = parse_theory(kT2);
  Exemplar ht = build_exemplar(t2, attribute("round", "bob"), WorldAssumption::OWA,
                               PromptStyle::HypothesisTesting);
  REQUIRE(ht.rationale);
  CHECK(ht.answer == TruthValue::Unknown);
  const std::string tail = "is unknown.";
  CHECK(ht.rationale->substr(ht.rationale->size() - tail.size()) == tail);
}

TEST_CASE("render_prompt structure and determinism") {
  Theory t1 = parse_theory(kT1);
  Prompt p;
  p.style = PromptStyle::Standard;
  p.exemplars.push_back(build_exemplar(t1, attribute("blue", "alan"), WorldAssumption::CWA,
                                       PromptStyle::Standard));
  p.target_question = question_text(t1, attribute("green", "alan"));
  std::string text = render_prompt(p);
  CHECK(count(text, "Q: ") == 2);
  CHECK(text == render_prompt(p));
  CHECK(text.substr(text.size() - 3) == "\nA:");
  CHECK(target_question_of(text) == p.target_question);
  CHECK(style_of(text) == PromptStyle::Standard);
}

TEST_CASE("prompt goldens") {
  for (PromptStyle style : {PromptStyle::Standard, PromptStyle::CoT, PromptStyle::HypothesisTesting}) {
    std::string text = render_prompt(sample_prompt(style));
    CHECK_MESSAGE(matches_golden("prompt_" + to_string(style) + ".txt", text), to_string(style));
    CHECK(style_of(text) == style);
  }
  std::string ht = render_prompt(sample_prompt(PromptStyle::HypothesisTesting));
  CHECK(ht.find("First assume the conclusion is True") != std::string::npos);
}

TEST_CASE("extract_answer") {
  CHECK(extract_answer("... So the conclusion 'Bob is round.' is unknown.") == TruthValue::Unknown);
  CHECK(extract_answer("True. Wait, the answer is false.") == TruthValue::False);
  CHECK_FALSE(extract_answer("I cannot determine this."));
  CHECK(extract_answer("First assume the conclusion is True and start from nothing.") ==
        TruthValue::True);  // token fallback only
  CHECK(extract_answer("First assume the conclusion is True ... so the answer is Unknown") ==
        TruthValue::Unknown);
  CHECK(extract_answer("THE ANSWER IS TRUE") == TruthValue::True);
  CHECK(extract_answer("the answer is: false.") == TruthValue::False);
  CHECK_FALSE(extract_answer("untrue falsehood"));
}

TEST_CASE("style purity and the closure law on random exemplars") {
  std::mt19937_64 rng(77);
  int built = 0;
  for (int i = 0; i < 400; ++i) {
    oracle::RandomTheoryOptions opt;
    opt.assumption = i % 2 ? WorldAssumption::OWA : WorldAssumption::CWA;
    Theory t = oracle::random_theory(rng, opt);
    oracle::NaiveModel m = oracle::naive_model(t, opt.assumption);
    if (!m.stratified || !m.consistent) continue;
    auto entities = t.entities();
    auto preds = t.predicates();
    Predicate p = preds[rng() % preds.size()];
    Literal q{p, {}, rng() % 3 ? Polarity::Positive : Polarity::Negative};
    for (int a = 0; a < p.arity; ++a) q.args.push_back(entities[rng() % entities.size()]);
    TruthValue expected = oracle::naive_verdict(m, opt.assumption, q);
    for (PromptStyle style :
         {PromptStyle::Standard, PromptStyle::CoT, PromptStyle::HypothesisTesting}) {
      Exemplar e = build_exemplar(t, q, opt.assumption, style);
      CHECK(e.answer == expected);
      CHECK(extract_answer(answer_text(e)) == e.answer);
      CHECK(e.rationale.has_value() == (style != PromptStyle::Standard));
      if (style == PromptStyle::HypothesisTesting) {
        CHECK(e.rationale->find("assume the conclusion is True") != std::string::npos);
        CHECK(e.rationale->find("assume the conclusion is False") != std::string::npos);
        CHECK(extract_answer(*e.rationale) == e.answer);
      }
      CHECK(parse_question(e.question).theory == t);
      ++built;
    }
  }
  CHECK(built >= 600);
}

TEST_CASE("parse_prompt_style") {
  CHECK(parse_prompt_style("HT") == PromptStyle::HypothesisTesting);
  CHECK(parse_prompt_style("cot") == PromptStyle::CoT);
  CHECK_THROWS_AS(parse_prompt_style("zero-shot"), UsageError);
}

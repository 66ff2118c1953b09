#include "doctest.h"
#include "htp/engine.hpp"
#include "htp/error.hpp"
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

const char* kT3 =
    "Alan is big.\n"
    "If someone is not round then they are green.\n";

std::map<Literal, int> depths(const Closure& c) {
  std::map<Literal, int> out;
  for (const auto& [l, d] : c.derived()) out.emplace(l, d.depth);
  return out;
}

}  // namespace

TEST_CASE("check_stratified") {
  CHECK_NOTHROW(check_stratified(parse_theory(kT1)));
  CHECK_NOTHROW(check_stratified(parse_theory(
      "If someone is not round then they are green.\nIf someone is big then they are round.\n")));
  try {
    check_stratified(parse_theory("If someone is not nice then they are nice.\n"));
    FAIL("expected stratification error");
  } catch (const StratificationError& e) {
    CHECK(e.cycle() == std::vector<std::string>{"nice"});
  }
}

TEST_CASE("strata order negated dependencies") {
  auto s = strata(parse_theory(
      "If someone is not round then they are green.\nIf someone is big then they are round.\n"));
  CHECK(s.at(Predicate{"round", 1}) < s.at(Predicate{"green", 1}));
  CHECK(s.at(Predicate{"big", 1}) == s.at(Predicate{"round", 1}));
}

TEST_CASE("longer negative cycle is named") {
  try {
    check_stratified(parse_theory(
        "If someone is not a1 then they are b1.\nIf someone is b1 then they are a1.\n"));
    FAIL("expected stratification error");
  } catch (const StratificationError& e) {
    CHECK(e.cycle().size() == 2);
  }
}

TEST_CASE("closure T1 under CWA") {
  Closure c = closure(parse_theory(kT1), WorldAssumption::CWA);
  CHECK(depths(c) == std::map<Literal, int>{{attribute("big", "alan"), 0},
                                             {attribute("round", "alan"), 1},
                                             {attribute("blue", "alan"), 2}});
}

TEST_CASE("closure T2 under OWA") {
  Closure c = closure(parse_theory(kT2), WorldAssumption::OWA);
  CHECK(depths(c) == std::map<Literal, int>{
                         {attribute("big", "alan"), 0},
                         {attribute("blue", "bob", Polarity::Negative), 0},
                         {attribute("round", "alan"), 1}});
}

TEST_CASE("closure T3 under CWA uses negation as failure") {
  Closure c = closure(parse_theory(kT3), WorldAssumption::CWA);
  REQUIRE(c.find(attribute("green", "alan")));
  CHECK(c.find(attribute("green", "alan"))->depth == 1);
  Proof p = proof_of(c, attribute("green", "alan"));
  REQUIRE(p.steps.size() == 2);
  CHECK(std::holds_alternative<NegationAsFailure>(p.steps[0].justification));
  CHECK(p.steps[0].conclusion == attribute("round", "alan", Polarity::Negative));
}

TEST_CASE("closure rejects inconsistent OWA theory") {
  CHECK_THROWS_AS(closure(parse_theory("A is p.\nA is not p.\n"), WorldAssumption::OWA),
                  InconsistencyError);
}

TEST_CASE("closure rejects explicit negation and unstratified theories under CWA") {
  CHECK_THROWS_AS(closure(parse_theory(kT2), WorldAssumption::CWA), TheoryError);
  CHECK_THROWS_AS(closure(parse_theory("Alan is big.\nIf someone is not nice then they are nice.\n"),
                          WorldAssumption::CWA),
                  StratificationError);
  // The same self-negating rule is an ordinary rule under OWA.
  CHECK_NOTHROW(closure(parse_theory("Alan is big.\nIf someone is not nice then they are nice.\n"),
                        WorldAssumption::OWA));
}

TEST_CASE("verdicts on T1 and T2") {
  Theory t1 = parse_theory(kT1);
  Verdict v = verdict(t1, WorldAssumption::CWA, attribute("blue", "alan"));
  CHECK(v.value == TruthValue::True);
  CHECK(v.depth == 2);
  REQUIRE(v.proof);
  REQUIRE(v.proof->steps.size() == 3);
  CHECK(std::get<FactRef>(v.proof->steps[0].justification).fact_id == "F1");
  CHECK(std::get<RuleApplication>(v.proof->steps[1].justification).rule_id == "R1");
  CHECK(std::get<RuleApplication>(v.proof->steps[2].justification).rule_id == "R2");

  Verdict green_cwa = verdict(t1, WorldAssumption::CWA, attribute("green", "alan"));
  CHECK(green_cwa.value == TruthValue::False);
  CHECK_FALSE(green_cwa.depth);
  CHECK_FALSE(green_cwa.proof);
  CHECK(verdict(t1, WorldAssumption::OWA, attribute("green", "alan")).value ==
        TruthValue::Unknown);

  Verdict blue_bob = verdict(parse_theory(kT2), WorldAssumption::OWA, attribute("blue", "bob"));
  CHECK(blue_bob.value == TruthValue::False);
  CHECK(blue_bob.depth == 0);
  REQUIRE(blue_bob.proof);
  REQUIRE(blue_bob.proof->steps.size() == 1);
  CHECK(std::get<FactRef>(blue_bob.proof->steps[0].justification).fact_id == "F2");
}

TEST_CASE("negative queries mirror positive ones") {
  Theory t1 = parse_theory(kT1);
  Verdict not_blue = verdict(t1, WorldAssumption::CWA,
                             attribute("blue", "alan", Polarity::Negative));
  CHECK(not_blue.value == TruthValue::False);
  CHECK(not_blue.depth == 2);
  Verdict not_green = verdict(t1, WorldAssumption::CWA,
                              attribute("green", "alan", Polarity::Negative));
  CHECK(not_green.value == TruthValue::True);
  CHECK_FALSE(not_green.depth);
  CHECK(verdict(t1, WorldAssumption::OWA, attribute("green", "alan", Polarity::Negative)).value ==
        TruthValue::Unknown);
}

TEST_CASE("proof_of") {
  Closure c = closure(parse_theory(kT1), WorldAssumption::CWA);
  Proof blue = proof_of(c, attribute("blue", "alan"));
  CHECK(blue.steps.size() == 3);
  CHECK(std::get<RuleApplication>(blue.steps.back().justification).rule_id == "R2");
  for (const auto& s : blue.steps) CHECK(s.depth == c.find(s.conclusion)->depth);
  Proof big = proof_of(c, attribute("big", "alan"));
  REQUIRE(big.steps.size() == 1);
  CHECK(std::get<FactRef>(big.steps[0].justification).fact_id == "F1");
  CHECK_THROWS_AS(proof_of(c, attribute("green", "alan")), NotDerivedError);
}

TEST_CASE("tie-break prefers the lowest rule id") {
  Theory t = parse_theory(
      "Alan is big.\nAlan is red.\n"
      "If someone is red then they are round.\n"
      "If someone is big then they are round.\n");
  Closure c = closure(t, WorldAssumption::OWA);
  CHECK(std::get<RuleApplication>(c.find(attribute("round", "alan"))->provenance).rule_id == "R1");
}

TEST_CASE("minimal depth wins over an earlier longer chain") {
  Theory t = parse_theory(
      "Alan is a.\nAlan is c.\n"
      "If someone is a then they are b.\n"
      "If someone is b then they are goal.\n"
      "If someone is c then they are goal.\n");
  Closure c = closure(t, WorldAssumption::OWA);
  CHECK(c.find(attribute("goal", "alan"))->depth == 1);
  CHECK(std::get<RuleApplication>(c.find(attribute("goal", "alan"))->provenance).rule_id == "R3");
}

TEST_CASE("ground rules and existential conditions") {
  Theory t = parse_theory(
      "Bob likes Alan.\n"
      "If someone likes Alan then Alan is happy.\n"
      "If Alan is happy then Bob is glad.\n");
  Closure c = closure(t, WorldAssumption::OWA);
  CHECK(c.find(attribute("happy", "alan"))->depth == 1);
  CHECK(c.find(attribute("glad", "bob"))->depth == 2);
}

TEST_CASE("engine agrees with the naive round-based oracle") {
  std::mt19937_64 rng(20240501);
  int compared = 0, inconsistent = 0, unstratified = 0;
  for (int i = 0; i < 3000; ++i) {
    oracle::RandomTheoryOptions opt;
    opt.assumption = (i % 2 == 0) ? WorldAssumption::CWA : WorldAssumption::OWA;
    opt.negation = (i % 3 != 0);
    opt.max_entities = 1 + i % 8;
    opt.max_rules = 12;
    Theory t = oracle::random_theory(rng, opt);
    oracle::NaiveModel m = oracle::naive_model(t, opt.assumption);
    if (!m.stratified) {
      CHECK_THROWS_AS(closure(t, opt.assumption), StratificationError);
      ++unstratified;
      continue;
    }
    if (!m.consistent) {
      CHECK_THROWS_AS(closure(t, opt.assumption), InconsistencyError);
      ++inconsistent;
      continue;
    }
    Closure c = closure(t, opt.assumption);
    REQUIRE(depths(c) == m.depth);
    for (const auto& [lit, d] : c.derived()) {
      Proof p = proof_of(c, lit);
      std::string problem = oracle::check_proof(t, opt.assumption, p, m);
      CHECK_MESSAGE(problem.empty(), problem);
      CHECK(p.steps.back().depth == d.depth);
      CHECK(verdict(c, lit).value == TruthValue::True);
      TruthValue expect_neg = oracle::naive_verdict(m, opt.assumption, lit.complement());
      CHECK(verdict(c, lit.complement()).value == expect_neg);
    }
    // Queries over every ground attribute literal in the domain.
    for (const auto& e : c.domain()) {
      for (const auto& p : t.predicates()) {
        if (p.arity != 1) continue;
        for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
          Literal q{p, {e}, pol};
          TruthValue v = verdict(c, q).value;
          CHECK(v == oracle::naive_verdict(m, opt.assumption, q));
          if (opt.assumption == WorldAssumption::CWA) CHECK(v != TruthValue::Unknown);
          if (opt.assumption == WorldAssumption::OWA) {
            CHECK((v == TruthValue::Unknown) == (!c.contains(q) && !c.contains(q.complement())));
          }
        }
      }
    }
    ++compared;
  }
  MESSAGE("compared=" << compared << " inconsistent=" << inconsistent
                      << " unstratified=" << unstratified);
  CHECK(compared > 1500);
}

TEST_CASE("fixpoint idempotence") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    oracle::RandomTheoryOptions opt;
    opt.assumption = WorldAssumption::OWA;
    Theory t = oracle::random_theory(rng, opt);
    Closure c = [&] {
      try {
        return std::optional<Closure>(closure(t, opt.assumption));
      } catch (const InconsistencyError&) {
        return std::optional<Closure>();
      }
    }().value_or(Closure(opt.assumption, {}, {}));
    if (c.derived().empty()) continue;
    Theory expanded = t;
    expanded.facts.clear();
    for (const auto& [lit, d] : c.derived()) {
      expanded.facts.push_back({"F" + std::to_string(expanded.facts.size() + 1), lit});
    }
    Closure again = closure(expanded, opt.assumption);
    CHECK(again.derived().size() == c.derived().size());
  }
}

TEST_CASE("closure is deterministic") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    oracle::RandomTheoryOptions opt;
    opt.negation = false;
    Theory t = oracle::random_theory(rng, opt);
    Closure a = closure(t, WorldAssumption::OWA);
    Closure b = closure(t, WorldAssumption::OWA);
    for (const auto& [lit, d] : a.derived()) {
      CHECK(proof_of(a, lit) == proof_of(b, lit));
    }
  }
}

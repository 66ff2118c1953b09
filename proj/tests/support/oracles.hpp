#pragma once

// Test-only oracles, written independently of the library's reasoning code:
// a naive round-based fixpoint, a proof checker that re-applies every
// justification syntactically, and a small random theory generator.

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "htp/engine.hpp"
#include "htp/rulelang.hpp"

namespace oracle {

using namespace htp;

struct NaiveModel {
  bool stratified = true;
  bool consistent = true;
  std::map<Literal, int> depth;  // minimal round in which each literal appears

  bool has(const Literal& l) const { return depth.count(l) > 0; }
};

inline Literal substitute(const Literal& l, const Entity& e) {
  Literal out = l;
  for (auto& t : out.args) {
    if (std::holds_alternative<Variable>(t)) t = e;
  }
  return out;
}

struct GroundRule {
  std::vector<Literal> body;
  Literal head;
};

inline std::vector<GroundRule> ground_all(const Theory& t) {
  std::set<Entity> domain;
  auto note = [&](const Literal& l) {
    for (const auto& a : l.args) {
      if (auto* e = std::get_if<Entity>(&a)) domain.insert(*e);
    }
  };
  for (const auto& f : t.facts) note(f.literal);
  for (const auto& r : t.rules) {
    note(r.consequent);
    for (const auto& a : r.antecedents) note(a);
  }
  std::set<std::pair<std::vector<Literal>, Literal>> seen;
  std::vector<GroundRule> out;
  for (const auto& r : t.rules) {
    for (const auto& e : domain) {
      GroundRule g{{}, substitute(r.consequent, e)};
      for (const auto& a : r.antecedents) g.body.push_back(substitute(a, e));
      if (seen.insert({g.body, g.head}).second) out.push_back(g);
    }
  }
  return out;
}

// Stratum numbers by plain relaxation; fails if levels exceed the number of
// predicates (a negative cycle).
inline std::optional<std::map<std::string, int>> naive_strata(const Theory& t) {
  std::map<std::string, int> level;
  auto key = [](const Predicate& p) { return p.name + "/" + std::to_string(p.arity); };
  for (const auto& f : t.facts) level[key(f.literal.predicate)] = 0;
  for (const auto& r : t.rules) {
    level[key(r.consequent.predicate)] = 0;
    for (const auto& a : r.antecedents) level[key(a.predicate)] = 0;
  }
  const int limit = static_cast<int>(level.size());
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& r : t.rules) {
      for (const auto& a : r.antecedents) {
        int need = level[key(a.predicate)] + (a.positive() ? 0 : 1);
        int& head = level[key(r.consequent.predicate)];
        if (head < need) {
          head = need;
          changed = true;
          if (head > limit) return std::nullopt;
        }
      }
    }
  }
  return level;
}

inline NaiveModel naive_model(const Theory& t, WorldAssumption wa) {
  NaiveModel m;
  std::vector<GroundRule> rules = ground_all(t);
  auto key = [](const Predicate& p) { return p.name + "/" + std::to_string(p.arity); };

  // Final model first (CWA: stratum by stratum), then depths by rounds.
  std::set<Literal> model;
  for (const auto& f : t.facts) model.insert(f.literal);
  if (wa == WorldAssumption::CWA) {
    auto levels = naive_strata(t);
    if (!levels) {
      m.stratified = false;
      return m;
    }
    int top = 0;
    for (const auto& [k, v] : *levels) top = std::max(top, v);
    for (int s = 0; s <= top; ++s) {
      for (bool changed = true; changed;) {
        changed = false;
        for (const auto& g : rules) {
          if ((*levels)[key(g.head.predicate)] != s || model.count(g.head)) continue;
          bool ok = true;
          for (const auto& b : g.body) {
            ok = b.positive() ? model.count(b) > 0 : model.count(b.complement()) == 0;
            if (!ok) break;
          }
          if (ok) {
            model.insert(g.head);
            changed = true;
          }
        }
      }
    }
  }

  std::set<Literal> current;
  for (const auto& f : t.facts) {
    current.insert(f.literal);
    m.depth.emplace(f.literal, 0);
  }
  for (int round = 1;; ++round) {
    std::set<Literal> next = current;
    for (const auto& g : rules) {
      bool ok = true;
      for (const auto& b : g.body) {
        if (wa == WorldAssumption::CWA && !b.positive()) {
          ok = model.count(b.complement()) == 0;
        } else {
          ok = current.count(b) > 0;
        }
        if (!ok) break;
      }
      if (ok && !next.count(g.head)) {
        next.insert(g.head);
        m.depth.emplace(g.head, round);
      }
    }
    if (next.size() == current.size()) break;
    current = std::move(next);
  }
  if (wa == WorldAssumption::OWA) {
    for (const auto& [l, d] : m.depth) {
      if (m.depth.count(l.complement())) m.consistent = false;
    }
  }
  return m;
}

inline TruthValue naive_verdict(const NaiveModel& m, WorldAssumption wa, const Literal& q) {
  if (m.has(q)) return TruthValue::True;
  if (m.has(q.complement())) return TruthValue::False;
  if (wa == WorldAssumption::OWA) return TruthValue::Unknown;
  return q.positive() ? TruthValue::False : TruthValue::True;
}

/// Re-checks an engine proof step by step. Returns an empty string when
/// valid, otherwise a description of the first problem.
inline std::string check_proof(const Theory& t, WorldAssumption wa, const Proof& proof,
                               const NaiveModel& model) {
  std::map<Literal, int> seen;
  for (std::size_t i = 0; i < proof.steps.size(); ++i) {
    const ProofStep& s = proof.steps[i];
    const std::string where = "step " + std::to_string(i + 1) + ": ";
    int depth = 0;
    if (auto* f = std::get_if<FactRef>(&s.justification)) {
      const Fact* fact = t.find_fact(f->fact_id);
      if (!fact || !(fact->literal == s.conclusion)) return where + "bad fact citation";
    } else if (auto* r = std::get_if<RuleApplication>(&s.justification)) {
      const Rule* rule = t.find_rule(r->rule_id);
      if (!rule) return where + "unknown rule";
      if (rule->antecedents.size() != r->premises.size()) return where + "premise count";
      for (std::size_t k = 0; k < rule->antecedents.size(); ++k) {
        Literal expect = r->binding ? substitute(rule->antecedents[k], *r->binding)
                                    : rule->antecedents[k];
        if (!(expect == r->premises[k])) return where + "premise mismatch";
        auto it = seen.find(r->premises[k]);
        if (it == seen.end()) return where + "premise not established earlier";
        depth = std::max(depth, it->second + 1);
      }
      Literal head = r->binding ? substitute(rule->consequent, *r->binding) : rule->consequent;
      if (!(head == s.conclusion)) return where + "conclusion mismatch";
      if (!s.conclusion.is_ground()) return where + "non-ground conclusion";
    } else {
      if (wa != WorldAssumption::CWA || s.conclusion.positive()) return where + "NAF misuse";
      if (model.has(s.conclusion.complement())) return where + "NAF on derivable literal";
    }
    if (depth != s.depth) return where + "depth mismatch";
    seen.emplace(s.conclusion, depth);
  }
  if (proof.steps.empty() || !(proof.steps.back().conclusion == proof.root)) {
    return "proof does not conclude its root";
  }
  return "";
}

struct RandomTheoryOptions {
  int max_entities = 4;
  int max_attributes = 5;
  int max_facts = 6;
  int max_rules = 8;
  int max_antecedents = 3;
  bool negation = true;
  bool relations = true;
  WorldAssumption assumption = WorldAssumption::OWA;
};

/// Unconstrained random theory (may be unstratified or inconsistent).
inline Theory random_theory(std::mt19937_64& rng, const RandomTheoryOptions& o) {
  static const char* kNames[] = {"anne", "bob", "charlie", "dave", "erin", "fiona", "gary", "harry"};
  static const char* kAttrs[] = {"big", "blue", "cold", "green", "kind", "nice", "red", "round"};
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
  int n_ent = 1 + pick(o.max_entities);
  int n_attr = 1 + pick(o.max_attributes);
  auto polarity = [&](bool allow_neg) {
    return (allow_neg && o.negation && pick(3) == 0) ? Polarity::Negative : Polarity::Positive;
  };
  bool cwa = o.assumption == WorldAssumption::CWA;
  auto term = [&](bool var_ok) -> Term {
    if (var_ok && pick(4) != 0) return Variable{};
    return Entity{kNames[pick(n_ent)]};
  };
  auto literal = [&](bool var_ok, bool allow_neg) {
    if (o.relations && pick(5) == 0) {
      return Literal{Predicate{"like", 2}, {term(var_ok), term(var_ok)}, polarity(allow_neg)};
    }
    return Literal{Predicate{kAttrs[pick(n_attr)], 1}, {term(var_ok)}, polarity(allow_neg)};
  };

  Theory t;
  std::set<Literal> facts;
  int n_facts = 1 + pick(o.max_facts);
  for (int i = 0; i < n_facts; ++i) {
    Literal l = literal(false, !cwa);
    if (facts.insert(l).second) t.facts.push_back({"F" + std::to_string(t.facts.size() + 1), l});
  }
  int n_rules = pick(o.max_rules + 1);
  for (int i = 0; i < n_rules; ++i) {
    Rule r;
    int n_ant = 1 + pick(o.max_antecedents);
    for (int k = 0; k < n_ant; ++k) r.antecedents.push_back(literal(true, true));
    bool body_var = false;
    for (const auto& a : r.antecedents) body_var = body_var || a.has_variable();
    r.consequent = literal(body_var, !cwa);
    r.id = "R" + std::to_string(t.rules.size() + 1);
    t.rules.push_back(std::move(r));
  }
  return t;
}

}  // namespace oracle

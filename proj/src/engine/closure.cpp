#include <algorithm>
#include <cctype>
#include <set>

#include "htp/engine.hpp"
#include "htp/error.hpp"

namespace htp {

std::string to_string(WorldAssumption assumption) {
  return assumption == WorldAssumption::CWA ? "CWA" : "OWA";
}

std::string to_string(TruthValue value) {
  switch (value) {
    case TruthValue::True: return "True";
    case TruthValue::False: return "False";
    case TruthValue::Unknown: return "Unknown";
  }
  return "Unknown";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

WorldAssumption parse_assumption(std::string_view text) {
  std::string t = lower(text);
  if (t == "cwa") return WorldAssumption::CWA;
  if (t == "owa") return WorldAssumption::OWA;
  throw UsageError("unknown world assumption '" + std::string(text) + "' (expected cwa|owa)");
}

TruthValue parse_truth_value(std::string_view text) {
  std::string t = lower(text);
  if (t == "true") return TruthValue::True;
  if (t == "false") return TruthValue::False;
  if (t == "unknown") return TruthValue::Unknown;
  throw UsageError("unknown truth value '" + std::string(text) + "'");
}

Closure::Closure(WorldAssumption assumption, std::vector<Entity> domain,
                 std::map<Literal, Derivation> derived)
    : assumption_(assumption), domain_(std::move(domain)), derived_(std::move(derived)) {}

const Derivation* Closure::find(const Literal& literal) const {
  auto it = derived_.find(literal);
  return it == derived_.end() ? nullptr : &it->second;
}

bool Closure::holds(const Literal& literal) const {
  if (assumption_ == WorldAssumption::CWA && !literal.positive()) {
    return !contains(literal.complement());
  }
  return contains(literal);
}

namespace {

struct Instance {
  std::size_t rule_index;
  const Rule* rule;
  std::optional<Entity> binding;
  std::vector<Literal> premises;
  Literal head;
};

std::vector<Instance> ground(const Theory& theory, const std::vector<Entity>& domain) {
  std::vector<Instance> out;
  for (std::size_t i = 0; i < theory.rules.size(); ++i) {
    const Rule& rule = theory.rules[i];
    auto add = [&](std::optional<Entity> binding) {
      Instance inst{i, &rule, binding, {}, rule.consequent};
      for (const auto& a : rule.antecedents) {
        inst.premises.push_back(binding ? a.bind(*binding) : a);
      }
      if (binding) inst.head = rule.consequent.bind(*binding);
      out.push_back(std::move(inst));
    };
    if (rule.has_variable()) {
      for (const auto& e : domain) add(e);
    } else {
      add(std::nullopt);
    }
  }
  return out;
}

// Breadth-first layering over one group of rule instances: layer k adds
// every head whose premises were all available by layer k-1, so recorded
// depths are minimal. Ties within a layer go to the lowest rule index, then
// the lexicographically smallest premise list.
void saturate(const std::vector<const Instance*>& group, WorldAssumption assumption,
              std::map<Literal, Derivation>& derived) {
  auto max_depth = [&] {
    int m = 0;
    for (const auto& [lit, d] : derived) m = std::max(m, d.depth);
    return m;
  };
  int ceiling = max_depth();
  for (int k = 1;; ++k) {
    std::map<Literal, const Instance*> layer;
    for (const Instance* inst : group) {
      if (derived.count(inst->head)) continue;
      bool ready = true;
      for (const auto& p : inst->premises) {
        if (assumption == WorldAssumption::CWA && !p.positive()) {
          // Lower strata are complete, so absence is final.
          if (derived.count(p.complement())) ready = false;
        } else {
          auto it = derived.find(p);
          if (it == derived.end() || it->second.depth > k - 1) ready = false;
        }
        if (!ready) break;
      }
      if (!ready) continue;
      auto [it, inserted] = layer.emplace(inst->head, inst);
      if (!inserted) {
        const Instance* cur = it->second;
        if (std::tie(inst->rule_index, inst->premises) <
            std::tie(cur->rule_index, cur->premises)) {
          it->second = inst;
        }
      }
    }
    for (const auto& [head, inst] : layer) {
      derived.emplace(head, Derivation{k, RuleApplication{inst->rule->id, inst->binding,
                                                          inst->premises}});
    }
    if (layer.empty() && k > ceiling) break;
  }
}

}  // namespace

Closure closure(const Theory& theory, WorldAssumption assumption) {
  validate_theory(theory, assumption);
  std::vector<Entity> domain = theory.entities();
  std::map<Literal, Derivation> derived;
  for (const auto& f : theory.facts) derived.emplace(f.literal, Derivation{0, FactRef{f.id}});

  std::vector<Instance> instances = ground(theory, domain);
  if (assumption == WorldAssumption::CWA) {
    std::map<Predicate, int> level = strata(theory);
    int top = 0;
    for (const auto& [p, l] : level) top = std::max(top, l);
    for (int s = 0; s <= top; ++s) {
      std::vector<const Instance*> group;
      for (const auto& inst : instances) {
        if (level.at(inst.head.predicate) == s) group.push_back(&inst);
      }
      saturate(group, assumption, derived);
    }
  } else {
    std::vector<const Instance*> group;
    for (const auto& inst : instances) group.push_back(&inst);
    saturate(group, assumption, derived);
    for (const auto& [lit, d] : derived) {
      if (lit.positive() && derived.count(lit.complement())) {
        throw InconsistencyError("theory derives both '" + render_literal(lit) + "' and '" +
                                 render_literal(lit.complement()) + "'");
      }
    }
  }
  return Closure(assumption, std::move(domain), std::move(derived));
}

namespace {

void build_steps(const Closure& c, const Literal& lit, std::set<Literal>& done,
                 std::vector<ProofStep>& steps) {
  if (done.count(lit)) return;
  const Derivation* d = c.find(lit);
  if (!d) {
    // Only a closed-world negated premise can be missing from the model.
    done.insert(lit);
    steps.push_back({lit, NegationAsFailure{}, 0});
    return;
  }
  if (const auto* app = std::get_if<RuleApplication>(&d->provenance)) {
    for (const auto& p : app->premises) build_steps(c, p, done, steps);
  }
  done.insert(lit);
  steps.push_back({lit, d->provenance, d->depth});
}

}  // namespace

Proof proof_of(const Closure& closure, const Literal& literal) {
  if (!closure.contains(literal)) {
    throw NotDerivedError("'" + render_literal(literal) + "' is not derived");
  }
  Proof proof{literal, {}};
  std::set<Literal> done;
  build_steps(closure, literal, done, proof.steps);
  return proof;
}

Verdict verdict(const Closure& closure, const Literal& query) {
  auto established = [&](const Literal& lit, TruthValue value) {
    return Verdict{value, closure.find(lit)->depth, proof_of(closure, lit)};
  };
  if (closure.contains(query)) return established(query, TruthValue::True);
  if (closure.contains(query.complement())) {
    return established(query.complement(), TruthValue::False);
  }
  if (closure.assumption() == WorldAssumption::OWA) return Verdict{TruthValue::Unknown, {}, {}};
  // Closed world, neither polarity derived: the positive reading is false.
  return Verdict{query.positive() ? TruthValue::False : TruthValue::True, {}, {}};
}

Verdict verdict(const Theory& theory, WorldAssumption assumption, const Literal& query) {
  return verdict(closure(theory, assumption), query);
}

}  // namespace htp

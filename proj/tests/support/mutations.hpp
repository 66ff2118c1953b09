#pragma once

// Single-step corruptions of an honest hypothesis-testing trace.

#include <optional>
#include <random>
#include <string>

#include "htp/hypotest.hpp"

namespace mutation {

using namespace htp;

enum class Kind { WrongRule, WrongPremise, WrongSubstitution, FlippedVerdict };

inline const char* name(Kind k) {
  switch (k) {
    case Kind::WrongRule: return "wrong rule";
    case Kind::WrongPremise: return "wrong premise";
    case Kind::WrongSubstitution: return "wrong substitution";
    case Kind::FlippedVerdict: return "flipped verdict";
  }
  return "";
}

struct Mutant {
  HTrace trace;
  TruthValue claimed;
};

/// nullopt when the trace has no step this kind of corruption applies to.
inline std::optional<Mutant> mutate(const Theory& theory, const HTrace& honest, Kind kind,
                                    std::mt19937_64& rng) {
  Mutant m{honest, honest.verdict};
  PhaseTrace& phase =
      m.trace.phase_true.outcome == PhaseOutcome::Proved ? m.trace.phase_true : *m.trace.phase_false;
  std::vector<std::size_t> rule_steps;
  for (std::size_t k = 0; k < phase.steps.size(); ++k) {
    if (std::holds_alternative<RuleCitation>(phase.steps[k].citation)) rule_steps.push_back(k);
  }
  if (rule_steps.empty()) return std::nullopt;
  TraceStep& step = phase.steps[rule_steps[rng() % rule_steps.size()]];
  auto& cite = std::get<RuleCitation>(step.citation);
  const Rule* used = theory.find_rule(cite.rule_id);
  switch (kind) {
    case Kind::WrongRule: {
      // A rule whose conclusion or condition count cannot fit this step.
      std::string other = "R" + std::to_string(theory.rules.size() + 1);
      for (const auto& r : theory.rules) {
        if (r.consequent.predicate != used->consequent.predicate ||
            r.consequent.polarity != used->consequent.polarity ||
            r.antecedents.size() != used->antecedents.size()) {
          other = r.id;
          break;
        }
      }
      cite.rule_id = other;
      break;
    }
    case Kind::WrongPremise: {
      std::size_t k = rng() % cite.premises.size();
      cite.premises[k] = cite.premises[k].complement();
      break;
    }
    case Kind::WrongSubstitution: {
      if (!used->consequent.has_variable()) return std::nullopt;
      for (std::size_t a = 0; a < used->consequent.args.size(); ++a) {
        if (!std::holds_alternative<Variable>(used->consequent.args[a])) continue;
        Entity current = std::get<Entity>(step.conclusion.args[a]);
        Entity replacement{"zed"};
        for (const auto& e : theory.entities()) {
          if (e != current) replacement = e;
        }
        step.conclusion.args[a] = replacement;
      }
      break;
    }
    case Kind::FlippedVerdict:
      m.trace.verdict = m.trace.verdict == TruthValue::True ? TruthValue::False : TruthValue::True;
      m.claimed = m.trace.verdict;
      break;
  }
  return m;
}

}  // namespace mutation

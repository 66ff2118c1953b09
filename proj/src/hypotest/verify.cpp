#include <algorithm>
#include <set>

#include "htp/error.hpp"
#include "htp/hypotest.hpp"

namespace htp {

namespace {

bool match(const Literal& pattern, const Literal& ground, std::optional<Entity>& binding) {
  if (pattern.predicate != ground.predicate || pattern.polarity != ground.polarity ||
      pattern.args.size() != ground.args.size()) {
    return false;
  }
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    const auto* want = std::get_if<Entity>(&ground.args[i]);
    if (!want) return false;
    if (const auto* e = std::get_if<Entity>(&pattern.args[i])) {
      if (*e != *want) return false;
    } else if (binding && *binding != *want) {
      return false;
    } else {
      binding = *want;
    }
  }
  return true;
}

class PhaseChecker {
 public:
  PhaseChecker(const Theory& theory, WorldAssumption assumption, VerificationReport& report)
      : theory_(theory), assumption_(assumption), report_(report) {}

  void check(const PhaseTrace& phase, const Literal& goal) {
    phase_ = phase.hypothesis;
    if (phase.outcome != PhaseOutcome::Proved) return;
    if (phase.steps.empty()) {
      fail(0, "proved phase has no steps");
      return;
    }
    std::set<Literal> established;
    for (std::size_t i = 0; i < phase.steps.size(); ++i) {
      const TraceStep& s = phase.steps[i];
      if (auto reason = check_step(s, established); !reason.empty()) fail(i + 1, reason);
      established.insert(s.conclusion);
    }
    if (!(phase.steps.back().conclusion == goal)) {
      fail(phase.steps.size(), "last step does not conclude '" + render_literal(goal) + "'");
    }
  }

 private:
  void fail(std::size_t step, std::string reason) {
    report_.step_failures.push_back({phase_, step, std::move(reason)});
  }

  std::string check_step(const TraceStep& s, const std::set<Literal>& established) {
    if (!s.conclusion.is_ground()) return "conclusion is not ground";
    if (const auto* f = std::get_if<FactCitation>(&s.citation)) {
      const Fact* fact = theory_.find_fact(f->fact_id);
      if (!fact) return "no fact " + f->fact_id;
      if (!(fact->literal == s.conclusion)) return f->fact_id + " does not state this";
      return "";
    }
    if (const auto* r = std::get_if<RuleCitation>(&s.citation)) return check_rule(s, *r, established);
    if (assumption_ != WorldAssumption::CWA) return "negation as failure used under OWA";
    if (s.conclusion.positive()) return "negation as failure on a positive literal";
    const Closure* c = closed_world();
    if (!c) return "theory cannot be evaluated under CWA";
    if (c->contains(s.conclusion.complement())) {
      return "'" + render_literal(s.conclusion.complement()) + "' is derivable";
    }
    return "";
  }

  std::string check_rule(const TraceStep& s, const RuleCitation& r,
                         const std::set<Literal>& established) {
    const Rule* rule = theory_.find_rule(r.rule_id);
    if (!rule) return "no rule " + r.rule_id;
    if (rule->antecedents.size() != r.premises.size()) {
      return r.rule_id + " has " + std::to_string(rule->antecedents.size()) + " conditions, " +
             std::to_string(r.premises.size()) + " premises cited";
    }
    std::optional<Entity> binding;
    if (!match(rule->consequent, s.conclusion, binding)) {
      return r.rule_id + " does not conclude '" + render_literal(s.conclusion) + "'";
    }
    for (std::size_t k = 0; k < r.premises.size(); ++k) {
      if (!match(rule->antecedents[k], r.premises[k], binding)) {
        return "premise " + std::to_string(k + 1) + " does not instantiate " + r.rule_id +
               " consistently";
      }
    }
    if (binding) {
      auto domain = theory_.entities();
      if (!std::binary_search(domain.begin(), domain.end(), *binding)) {
        return "binding " + binding->name + " is not an entity of the theory";
      }
    }
    for (const auto& p : r.premises) {
      if (!established.count(p)) return "premise '" + render_literal(p) + "' not established earlier";
    }
    return "";
  }

  const Closure* closed_world() {
    if (!closure_tried_) {
      closure_tried_ = true;
      try {
        closure_.emplace(closure(theory_, WorldAssumption::CWA));
      } catch (const Error&) {
      }
    }
    return closure_ ? &*closure_ : nullptr;
  }

  const Theory& theory_;
  WorldAssumption assumption_;
  VerificationReport& report_;
  Hypothesis phase_ = Hypothesis::AssumeTrue;
  bool closure_tried_ = false;
  std::optional<Closure> closure_;
};

}  // namespace

VerificationReport verify_trace(const Theory& theory, const HTrace& trace, TruthValue claimed,
                                WorldAssumption assumption) {
  VerificationReport report;
  PhaseChecker checker(theory, assumption, report);
  checker.check(trace.phase_true, trace.conclusion);
  if (trace.phase_false) checker.check(*trace.phase_false, trace.conclusion.complement());

  bool shape = trace.phase_true.hypothesis == Hypothesis::AssumeTrue &&
               (!trace.phase_false || trace.phase_false->hypothesis == Hypothesis::AssumeFalse);
  // Omitting the assume-False phase is only acceptable when it cannot matter.
  bool complete = trace.phase_false.has_value() ||
                  (assumption == WorldAssumption::CWA &&
                   trace.phase_true.outcome == PhaseOutcome::Proved);
  std::optional<PhaseOutcome> false_outcome;
  if (trace.phase_false) false_outcome = trace.phase_false->outcome;
  auto decided = decide(trace.phase_true.outcome, false_outcome, assumption);
  report.verdict_consistent = shape && complete && trace.conclusion.is_ground() &&
                              trace.assumption == assumption && decided &&
                              *decided == trace.verdict && trace.verdict == claimed;
  report.accepted = report.step_failures.empty() && report.verdict_consistent;
  return report;
}

}  // namespace htp

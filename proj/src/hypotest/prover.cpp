#include <algorithm>
#include <climits>
#include <map>
#include <set>

#include "htp/error.hpp"
#include "htp/hypotest.hpp"

namespace htp {

namespace {

constexpr int kNever = INT_MAX;
constexpr std::size_t kNoLink = static_cast<std::size_t>(-1);

// Binding of the rule variable that makes `pattern` equal `goal`, if any.
// `bound` reports whether the pattern constrained the variable at all.
bool unify(const Literal& pattern, const Literal& goal, std::optional<Entity>& binding) {
  if (pattern.predicate != goal.predicate || pattern.polarity != goal.polarity) return false;
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    const auto& want = std::get<Entity>(goal.args[i]);
    if (const auto* e = std::get_if<Entity>(&pattern.args[i])) {
      if (*e != want) return false;
    } else if (binding && *binding != want) {
      return false;
    } else {
      binding = want;
    }
  }
  return true;
}

class BackwardProver {
 public:
  BackwardProver(const Theory& theory, WorldAssumption assumption)
      : theory_(theory), assumption_(assumption) {
    for (const auto& e : theory.entities()) domain_.push_back(e);
    for (const auto& f : theory.facts) facts_.emplace(f.literal, &f);
    for (const auto& r : theory.rules) {
      by_head_[{r.consequent.predicate, r.consequent.polarity}].push_back(&r);
    }
    // No minimal derivation is deeper than the number of ground literals.
    long literals = 0;
    for (const auto& p : theory.predicates()) {
      long n = 1;
      for (int i = 0; i < p.arity; ++i) n *= static_cast<long>(domain_.size());
      literals += 2 * n;
    }
    unbounded_ = static_cast<int>(std::min<long>(literals + 1, kNever - 1));
  }

  BackwardResult prove(const Literal& goal, int bound) {
    attempted_.clear();
    Outcome o = solve(goal, bound);
    if (o.depth) return extract(goal);
    BackwardFailure failure;
    for (const auto& lit : attempted_) {
      if (!proved_.count(lit) || proved_.at(lit).depth > bound) failure.frontier.push_back(lit);
    }
    return failure;
  }

 private:
  struct Found {
    int depth;
    Justification how;
  };

  struct Outcome {
    std::optional<int> depth;
    bool budget_limited = false;   // might succeed with a larger budget
    std::size_t link = kNoLink;    // lowest active-stack index the failure depended on
  };

  Outcome fail(const Literal& g, bool limited, std::size_t link = kNoLink) {
    attempted_.insert(g);
    return {std::nullopt, limited, link};
  }

  const std::vector<const Rule*>& candidates(const Literal& g) const {
    static const std::vector<const Rule*> kNone;
    auto it = by_head_.find({g.predicate, g.polarity});
    return it == by_head_.end() ? kNone : it->second;
  }

  std::vector<std::optional<Entity>> bindings(const Rule& rule, const Literal& g) const {
    std::optional<Entity> b;
    if (!unify(rule.consequent, g, b)) return {};
    if (b) {
      if (!std::binary_search(domain_.begin(), domain_.end(), *b)) return {};
      return {b};
    }
    if (!rule.has_variable()) return {std::nullopt};
    return {domain_.begin(), domain_.end()};
  }

  bool negation_as_failure(const Literal& negative) {
    // Stratification guarantees the positive complement never depends on a
    // goal currently on the stack, so it is decided on a fresh stack.
    std::vector<Literal> saved_stack;
    std::map<Literal, std::size_t> saved_index;
    std::set<Literal> saved_attempted;
    saved_stack.swap(stack_);
    saved_index.swap(on_stack_);
    saved_attempted.swap(attempted_);
    Outcome o = solve(negative.complement(), unbounded_);
    stack_.swap(saved_stack);
    on_stack_.swap(saved_index);
    attempted_.swap(saved_attempted);
    return !o.depth;
  }

  Outcome solve(const Literal& g, int budget) {
    if (auto it = proved_.find(g); it != proved_.end() && it->second.depth <= budget) {
      return {it->second.depth};
    }
    if (assumption_ == WorldAssumption::CWA && !g.positive()) {
      if (negation_as_failure(g)) {
        proved_.insert_or_assign(g, Found{0, NegationAsFailure{}});
        return {0};
      }
      failed_upto_[g] = kNever;
      return fail(g, false);
    }
    if (auto it = failed_upto_.find(g); it != failed_upto_.end() && it->second >= budget) {
      return fail(g, it->second != kNever);
    }
    if (auto it = on_stack_.find(g); it != on_stack_.end()) return fail(g, false, it->second);
    if (auto it = facts_.find(g); it != facts_.end()) {
      proved_.insert_or_assign(g, Found{0, FactRef{it->second->id}});
      return {0};
    }
    const auto& rules = candidates(g);
    if (budget == 0 || rules.empty()) {
      if (rules.empty()) failed_upto_[g] = kNever;
      else failed_upto_[g] = std::max(failed_upto_[g], 0);
      return fail(g, !rules.empty());
    }

    const std::size_t index = stack_.size();
    stack_.push_back(g);
    on_stack_.emplace(g, index);
    std::size_t link = kNoLink;
    bool limited = false;
    int start = 1;
    if (auto it = failed_upto_.find(g); it != failed_upto_.end()) start = it->second + 1;

    for (int k = start; k <= budget; ++k) {
      limited = false;
      std::size_t level_link = kNoLink;
      for (const Rule* rule : rules) {
        for (const auto& binding : bindings(*rule, g)) {
          std::vector<Literal> premises;
          for (const auto& a : rule->antecedents) {
            premises.push_back(binding ? a.bind(*binding) : a);
          }
          int deepest = 0;
          bool ok = true;
          for (const auto& p : premises) {
            Outcome o = solve(p, k - 1);
            if (!o.depth) {
              ok = false;
              limited = limited || o.budget_limited;
              level_link = std::min(level_link, o.link);
              break;
            }
            deepest = std::max(deepest, *o.depth);
          }
          if (ok) {
            pop(g);
            proved_.insert_or_assign(
                g, Found{deepest + 1, RuleApplication{rule->id, binding, std::move(premises)}});
            return {deepest + 1};
          }
        }
      }
      link = std::min(link, level_link);
      if (level_link >= index) failed_upto_[g] = limited ? k : kNever;
      if (!limited) break;
    }
    pop(g);
    return fail(g, limited, link < index ? link : kNoLink);
  }

  void pop(const Literal& g) {
    stack_.pop_back();
    on_stack_.erase(g);
  }

  int emit(const Literal& lit, std::map<Literal, int>& done, std::vector<ProofStep>& steps) {
    if (auto it = done.find(lit); it != done.end()) return it->second;
    const Found& f = proved_.at(lit);
    int depth = 0;
    if (const auto* app = std::get_if<RuleApplication>(&f.how)) {
      for (const auto& p : app->premises) depth = std::max(depth, emit(p, done, steps) + 1);
    }
    done.emplace(lit, depth);
    steps.push_back({lit, f.how, depth});
    return depth;
  }

  Proof extract(const Literal& goal) {
    Proof proof{goal, {}};
    std::map<Literal, int> done;
    emit(goal, done, proof.steps);
    return proof;
  }

  const Theory& theory_;
  WorldAssumption assumption_;
  std::vector<Entity> domain_;
  std::map<Literal, const Fact*> facts_;
  std::map<std::pair<Predicate, Polarity>, std::vector<const Rule*>> by_head_;
  int unbounded_ = 0;

  std::map<Literal, Found> proved_;
  std::map<Literal, int> failed_upto_;  // no proof of depth <= value, whatever the stack
  std::vector<Literal> stack_;
  std::map<Literal, std::size_t> on_stack_;
  std::set<Literal> attempted_;
};

PhaseTrace phase(Hypothesis h, const BackwardResult& r) {
  PhaseTrace p;
  p.hypothesis = h;
  if (const auto* proof = std::get_if<Proof>(&r)) {
    p.outcome = PhaseOutcome::Proved;
    p.steps = to_trace_steps(*proof);
  } else {
    p.outcome = PhaseOutcome::NotProved;
    p.frontier = std::get<BackwardFailure>(r).frontier;
  }
  return p;
}

}  // namespace

BackwardResult backward_prove(const Theory& theory, const Literal& goal,
                              WorldAssumption assumption, int bound) {
  if (bound < 0) throw UsageError("depth bound must be non-negative");
  if (!goal.is_ground()) throw UsageError("goal must be ground");
  BackwardProver prover(theory, assumption);
  return prover.prove(goal, bound);
}

std::vector<TraceStep> to_trace_steps(const Proof& proof) {
  std::vector<TraceStep> out;
  out.reserve(proof.steps.size());
  for (const auto& s : proof.steps) {
    Citation c = std::visit(
        [](const auto& j) -> Citation {
          using J = std::decay_t<decltype(j)>;
          if constexpr (std::is_same_v<J, FactRef>) {
            return FactCitation{j.fact_id};
          } else if constexpr (std::is_same_v<J, RuleApplication>) {
            return RuleCitation{j.rule_id, j.premises};
          } else {
            return ClosedWorldCitation{};
          }
        },
        s.justification);
    out.push_back({s.conclusion, std::move(c)});
  }
  return out;
}

std::optional<TruthValue> decide(PhaseOutcome phase_true, std::optional<PhaseOutcome> phase_false,
                                 WorldAssumption assumption) {
  bool t = phase_true == PhaseOutcome::Proved;
  bool f = phase_false == PhaseOutcome::Proved;
  if (t && f) return std::nullopt;
  if (t) return TruthValue::True;
  if (f) return TruthValue::False;
  return assumption == WorldAssumption::CWA ? TruthValue::False : TruthValue::Unknown;
}

HTrace hypothesis_test(const Theory& theory, const Literal& conclusion,
                       WorldAssumption assumption, int bound) {
  if (!conclusion.is_ground()) throw UsageError("conclusion must be ground");
  validate_theory(theory, assumption);
  BackwardProver prover(theory, assumption);
  HTrace trace;
  trace.conclusion = conclusion;
  trace.assumption = assumption;
  trace.phase_true = phase(Hypothesis::AssumeTrue, prover.prove(conclusion, bound));
  trace.phase_false = phase(Hypothesis::AssumeFalse, prover.prove(conclusion.complement(), bound));
  auto v = decide(trace.phase_true.outcome, trace.phase_false->outcome, assumption);
  if (!v) {
    throw InconsistencyError("theory proves both '" + render_literal(conclusion) + "' and '" +
                             render_literal(conclusion.complement()) + "'");
  }
  trace.verdict = *v;
  return trace;
}

std::string to_string(Hypothesis hypothesis) {
  return hypothesis == Hypothesis::AssumeTrue ? "AssumeTrue" : "AssumeFalse";
}

}  // namespace htp

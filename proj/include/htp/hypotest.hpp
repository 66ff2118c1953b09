#pragma once

// Hypothesis-testing deduction: assume the conclusion is true and chain
// backwards, assume it is false and chain backwards, then decide. Traces
// render to a machine-checkable canonical text and to a narrative
// paragraph, parse back, and verify step by step against a theory.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "htp/engine.hpp"
#include "htp/rulelang.hpp"

namespace htp {

inline constexpr int kDefaultBound = 10;

struct BackwardFailure {
  /// Every ground subgoal attempted and not proved, goal included, sorted.
  std::vector<Literal> frontier;
};

using BackwardResult = std::variant<Proof, BackwardFailure>;

/// Goal-directed search with a depth budget. Memoizes proved and failed
/// subgoals; a goal already on the active stack fails that branch only.
/// Returned proofs have minimal depth for the budget. Under CWA a negative
/// goal holds by negation as failure.
BackwardResult backward_prove(const Theory& theory, const Literal& goal,
                              WorldAssumption assumption, int bound = kDefaultBound);

enum class Hypothesis { AssumeTrue, AssumeFalse };
enum class PhaseOutcome { Proved, NotProved };

struct FactCitation {
  std::string fact_id;
  bool operator==(const FactCitation&) const = default;
};

struct RuleCitation {
  std::string rule_id;
  std::vector<Literal> premises;
  bool operator==(const RuleCitation&) const = default;
};

/// Closed-world step: the positive complement cannot be proved.
struct ClosedWorldCitation {
  bool operator==(const ClosedWorldCitation&) const = default;
};

using Citation = std::variant<FactCitation, RuleCitation, ClosedWorldCitation>;

struct TraceStep {
  Literal conclusion;
  Citation citation;
  bool operator==(const TraceStep&) const = default;
};

struct PhaseTrace {
  Hypothesis hypothesis = Hypothesis::AssumeTrue;
  std::vector<TraceStep> steps;
  PhaseOutcome outcome = PhaseOutcome::NotProved;
  std::vector<Literal> frontier;
  bool operator==(const PhaseTrace&) const = default;
};

struct HTrace {
  Literal conclusion;
  WorldAssumption assumption = WorldAssumption::OWA;
  PhaseTrace phase_true;
  std::optional<PhaseTrace> phase_false;
  TruthValue verdict = TruthValue::Unknown;
  bool operator==(const HTrace&) const = default;
};

/// Drops depths and bindings; the verifier re-derives bindings.
std::vector<TraceStep> to_trace_steps(const Proof& proof);

/// "Alan is round. by R1 from [Alan is big.]"
std::string render_step(const TraceStep& step);

/// Decision table. Returns nullopt when both phases proved (inconsistent).
/// A missing assume-False phase counts as not proved.
std::optional<TruthValue> decide(PhaseOutcome phase_true, std::optional<PhaseOutcome> phase_false,
                                 WorldAssumption assumption);

/// Runs both phases (always; under CWA the assume-False phase is recorded
/// even when it cannot change the verdict). Throws InconsistencyError when
/// both phases prove, and the engine's validation errors.
HTrace hypothesis_test(const Theory& theory, const Literal& conclusion,
                       WorldAssumption assumption, int bound = kDefaultBound);

enum class TraceStyle { Canonical, Narrative };

/// Narrative text quotes cited rules as sentences when `theory` is given,
/// otherwise by id (and then cannot be normalized back).
std::string render_trace(const HTrace& trace, TraceStyle style, const Theory* theory = nullptr);

/// Inverse of render_trace(t, Canonical). Throws ParseError with the
/// offending line number.
HTrace parse_trace(std::string_view text);

/// Best-effort reading of narrative text (the render_trace narrative
/// template, tolerant of whitespace and case). Fact and rule citations are
/// resolved against `theory` by logical form. Throws ParseError.
HTrace normalize_narrative(std::string_view text, const Theory& theory,
                           WorldAssumption assumption);

/// Canonical text if it parses as such, otherwise the narrative normalizer.
std::optional<HTrace> read_trace(std::string_view text, const Theory& theory,
                                 WorldAssumption assumption);

struct StepFailure {
  Hypothesis phase = Hypothesis::AssumeTrue;
  std::size_t step = 0;  // 1-based; 0 = the phase as a whole
  std::string reason;
};

struct VerificationReport {
  bool accepted = false;
  std::vector<StepFailure> step_failures;
  bool verdict_consistent = false;
};

/// Checks every proved phase step by step (citation exists, a consistent
/// binding instantiates the cited rule, premises established earlier, the
/// last step concludes the phase goal) and that `claimed` follows from the
/// phase outcomes. Not-proved phases are accepted as claims.
VerificationReport verify_trace(const Theory& theory, const HTrace& trace, TruthValue claimed,
                                WorldAssumption assumption);

std::string to_string(Hypothesis hypothesis);

}  // namespace htp

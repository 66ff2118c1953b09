#pragma once

// Ground-truth three-valued deduction by forward chaining.
//
// Closed world (CWA): negated rule conditions are negation as failure,
// evaluated stratum by stratum; theories must be stratified and may not
// state negative facts or negative consequents.
// Open world (OWA): "not L" is an ordinary literal that must itself be
// derived; deriving both L and not-L is an inconsistency.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "htp/rulelang.hpp"

namespace htp {

enum class WorldAssumption { CWA, OWA };
enum class TruthValue { True, False, Unknown };

/// "CWA" / "OWA".
std::string to_string(WorldAssumption assumption);
/// "True" / "False" / "Unknown".
std::string to_string(TruthValue value);
/// Case-insensitive; throws UsageError.
WorldAssumption parse_assumption(std::string_view text);
/// Case-insensitive; throws UsageError.
TruthValue parse_truth_value(std::string_view text);

struct FactRef {
  std::string fact_id;
  bool operator==(const FactRef&) const = default;
};

struct RuleApplication {
  std::string rule_id;
  std::optional<Entity> binding;  // value of the rule variable, if the rule has one
  std::vector<Literal> premises;  // antecedents under `binding`, in rule order
  bool operator==(const RuleApplication&) const = default;
};

/// Closed-world justification of a negative literal: its positive
/// complement is not derivable.
struct NegationAsFailure {
  bool operator==(const NegationAsFailure&) const = default;
};

using Justification = std::variant<FactRef, RuleApplication, NegationAsFailure>;

struct Derivation {
  int depth = 0;
  Justification provenance;  // FactRef or RuleApplication
};

struct ProofStep {
  Literal conclusion;
  Justification justification;
  int depth = 0;
  bool operator==(const ProofStep&) const = default;
};

/// Steps in topological order; the last step concludes `root`.
struct Proof {
  Literal root;
  std::vector<ProofStep> steps;
  bool operator==(const Proof&) const = default;
};

class Closure {
 public:
  Closure(WorldAssumption assumption, std::vector<Entity> domain,
          std::map<Literal, Derivation> derived);

  WorldAssumption assumption() const { return assumption_; }
  const std::vector<Entity>& domain() const { return domain_; }
  const std::map<Literal, Derivation>& derived() const { return derived_; }

  const Derivation* find(const Literal& literal) const;
  bool contains(const Literal& literal) const { return find(literal) != nullptr; }
  /// Membership in the model: under CWA a negative literal holds iff its
  /// complement is not derived.
  bool holds(const Literal& literal) const;

 private:
  WorldAssumption assumption_;
  std::vector<Entity> domain_;
  std::map<Literal, Derivation> derived_;
};

struct Verdict {
  TruthValue value = TruthValue::Unknown;
  std::optional<int> depth;  // absent iff no derivation decided the value
  std::optional<Proof> proof;
};

/// Throws StratificationError naming one predicate cycle that passes
/// through a negated condition.
void check_stratified(const Theory& theory);

/// Stratum of every predicate in the theory (0 = bottom). Throws
/// StratificationError.
std::map<Predicate, int> strata(const Theory& theory);

/// Preconditions for reasoning under `assumption`: under CWA the theory
/// must be stratified and free of negative facts/consequents (TheoryError).
void validate_theory(const Theory& theory, WorldAssumption assumption);

/// Least fixpoint with minimal derivation depths. Throws
/// StratificationError, TheoryError, or InconsistencyError (OWA).
Closure closure(const Theory& theory, WorldAssumption assumption);

Verdict verdict(const Closure& closure, const Literal& query);
Verdict verdict(const Theory& theory, WorldAssumption assumption, const Literal& query);

/// Minimal-depth proof of a derived literal. Throws NotDerivedError.
Proof proof_of(const Closure& closure, const Literal& literal);

}  // namespace htp

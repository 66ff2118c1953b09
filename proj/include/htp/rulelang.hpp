#pragma once

// Controlled-English theory language: typed logical forms for facts, rules
// and conclusions, plus the parser and canonical renderer.
//
// Grammar (see docs/grammar.ebnf for the frozen version):
//
//   fact  := ENTITY ("is" ["not"] ATTR | VERB_S ENTITY | "does" "not" VERB ENTITY) "."
//   rule  := "If" cond {"and" cond} "then" cond "."
//          | "All" ATTR {("," | "and") ATTR} ("people" | "things") "are" ["not"] ATTR "."
//
// "someone", "something", "they", "it" and "them" all denote the single
// rule variable.

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace htp {

struct Entity {
  std::string name;  // lower-case letters/digits

  auto operator<=>(const Entity&) const = default;
};

struct Predicate {
  std::string name;
  int arity = 1;  // 1 = attribute ("is big"), 2 = relation ("likes")

  auto operator<=>(const Predicate&) const = default;
};

/// The rule variable. A rule has at most one, so it carries no name.
struct Variable {
  auto operator<=>(const Variable&) const = default;
};

using Term = std::variant<Entity, Variable>;

enum class Polarity { Positive, Negative };

struct Literal {
  Predicate predicate;
  std::vector<Term> args;
  Polarity polarity = Polarity::Positive;

  auto operator<=>(const Literal&) const = default;

  bool positive() const { return polarity == Polarity::Positive; }
  bool is_ground() const;
  bool has_variable() const;
  Literal complement() const;
  /// Replaces every Variable with `value`.
  Literal bind(const Entity& value) const;
};

/// Attribute literal `name(subject)`.
Literal attribute(std::string_view name, std::string_view subject,
                  Polarity polarity = Polarity::Positive);
/// Relation literal `verb(subject, object)`; `verb` is the lemma.
Literal relation(std::string_view verb, std::string_view subject, std::string_view object,
                 Polarity polarity = Polarity::Positive);
/// Attribute literal over the rule variable.
Literal var_attribute(std::string_view name, Polarity polarity = Polarity::Positive);

struct Fact {
  std::string id;  // F<k>
  Literal literal;

  bool operator==(const Fact&) const = default;
};

struct Rule {
  std::string id;  // R<k>
  std::vector<Literal> antecedents;
  Literal consequent;

  bool operator==(const Rule&) const = default;
  bool has_variable() const;
  /// Same logical form, ignoring the id.
  bool same_form(const Rule& other) const;
};

struct Theory {
  std::vector<Fact> facts;
  std::vector<Rule> rules;

  bool operator==(const Theory&) const = default;

  const Fact* find_fact(std::string_view id) const;
  const Rule* find_rule(std::string_view id) const;
  /// Every entity mentioned in a fact or rule, sorted and deduplicated.
  std::vector<Entity> entities() const;
  /// Every predicate mentioned, sorted.
  std::vector<Predicate> predicates() const;
};

using Statement = std::variant<Fact, Rule>;

// Parsing ------------------------------------------------------------------

/// Parses one "."-terminated sentence. Returned facts/rules have an empty id.
/// Throws ParseError.
Statement parse_statement(std::string_view line);

/// Parses a sentence that must denote a ground literal (fact syntax).
Literal parse_literal(std::string_view sentence);

/// One statement per non-empty line; ids F1..Fn and R1..Rm in order of
/// appearance. Throws ParseError (with line set) or TheoryError on a
/// duplicate fact.
Theory parse_theory(std::string_view text);

/// Builds a theory from already-split sentences, numbering as parse_theory.
Theory theory_from_sentences(const std::vector<std::string>& facts,
                             const std::vector<std::string>& rules);

/// Verb lemma of a third-person singular form ("likes" -> "like").
std::string verb_lemma(std::string_view third_person);
/// Inverse of verb_lemma for the forms the lemmatizer produces.
std::string verb_third_person(std::string_view lemma);

bool is_reserved_word(std::string_view word);

// Rendering ----------------------------------------------------------------

/// Canonical sentence for a ground literal, e.g. "Bob does not like Alan."
std::string render_literal(const Literal& literal);
std::string render_statement(const Fact& fact);
std::string render_statement(const Rule& rule);
std::string render_statement(const Statement& statement);
/// One statement per line, facts first, each line terminated by '\n'.
std::string render_theory(const Theory& theory);

std::string capitalize(std::string_view word);
/// "big/1", "like/2".
std::string predicate_key(const Predicate& predicate);

}  // namespace htp

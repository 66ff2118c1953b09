#include <cctype>

#include "htp/rulelang.hpp"

namespace htp {

namespace {

enum class Position { Antecedent, Consequent };

std::string entity_text(const Entity& e) { return capitalize(e.name); }

std::string subject_text(const Term& t, Position where) {
  if (const auto* e = std::get_if<Entity>(&t)) return entity_text(*e);
  return where == Position::Antecedent ? "someone" : "they";
}

std::string object_text(const Term& t, Position where) {
  if (const auto* e = std::get_if<Entity>(&t)) return entity_text(*e);
  return where == Position::Antecedent ? "someone" : "them";
}

std::string clause(const Literal& l, Position where) {
  const Term& subj = l.args.at(0);
  bool plural = std::holds_alternative<Variable>(subj) && where == Position::Consequent;
  std::string out = subject_text(subj, where);
  if (l.predicate.arity == 1) {
    out += plural ? " are " : " is ";
    if (!l.positive()) out += "not ";
    return out + l.predicate.name;
  }
  if (!l.positive()) {
    out += plural ? " do not " : " does not ";
    out += l.predicate.name;
  } else {
    out += " ";
    out += plural ? l.predicate.name : verb_third_person(l.predicate.name);
  }
  return out + " " + object_text(l.args.at(1), where);
}

}  // namespace

std::string capitalize(std::string_view word) {
  std::string out(word);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string render_literal(const Literal& literal) {
  return clause(literal, Position::Antecedent) + ".";
}

std::string render_statement(const Fact& fact) { return render_literal(fact.literal); }

std::string render_statement(const Rule& rule) {
  std::string out = "If ";
  for (std::size_t i = 0; i < rule.antecedents.size(); ++i) {
    if (i > 0) out += " and ";
    out += clause(rule.antecedents[i], Position::Antecedent);
  }
  out += " then ";
  out += clause(rule.consequent, Position::Consequent);
  return out + ".";
}

std::string render_statement(const Statement& statement) {
  return std::visit([](const auto& s) { return render_statement(s); }, statement);
}

std::string render_theory(const Theory& theory) {
  std::string out;
  for (const auto& f : theory.facts) out += render_statement(f) + "\n";
  for (const auto& r : theory.rules) out += render_statement(r) + "\n";
  return out;
}

}  // namespace htp

#include <algorithm>
#include <set>

#include "htp/rulelang.hpp"

namespace htp {

bool Literal::is_ground() const {
  return std::all_of(args.begin(), args.end(),
                     [](const Term& t) { return std::holds_alternative<Entity>(t); });
}

bool Literal::has_variable() const { return !is_ground(); }

Literal Literal::complement() const {
  Literal out = *this;
  out.polarity = positive() ? Polarity::Negative : Polarity::Positive;
  return out;
}

Literal Literal::bind(const Entity& value) const {
  Literal out = *this;
  for (auto& t : out.args) {
    if (std::holds_alternative<Variable>(t)) t = value;
  }
  return out;
}

Literal attribute(std::string_view name, std::string_view subject, Polarity polarity) {
  return Literal{Predicate{std::string(name), 1}, {Entity{std::string(subject)}}, polarity};
}

Literal relation(std::string_view verb, std::string_view subject, std::string_view object,
                 Polarity polarity) {
  return Literal{Predicate{std::string(verb), 2},
                 {Entity{std::string(subject)}, Entity{std::string(object)}},
                 polarity};
}

Literal var_attribute(std::string_view name, Polarity polarity) {
  return Literal{Predicate{std::string(name), 1}, {Variable{}}, polarity};
}

bool Rule::has_variable() const {
  if (consequent.has_variable()) return true;
  return std::any_of(antecedents.begin(), antecedents.end(),
                     [](const Literal& l) { return l.has_variable(); });
}

bool Rule::same_form(const Rule& other) const {
  return antecedents == other.antecedents && consequent == other.consequent;
}

const Fact* Theory::find_fact(std::string_view id) const {
  for (const auto& f : facts) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

const Rule* Theory::find_rule(std::string_view id) const {
  for (const auto& r : rules) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

namespace {

void collect(const Literal& l, std::set<Entity>& out) {
  for (const auto& t : l.args) {
    if (const auto* e = std::get_if<Entity>(&t)) out.insert(*e);
  }
}

}  // namespace

std::vector<Entity> Theory::entities() const {
  std::set<Entity> found;
  for (const auto& f : facts) collect(f.literal, found);
  for (const auto& r : rules) {
    for (const auto& a : r.antecedents) collect(a, found);
    collect(r.consequent, found);
  }
  return {found.begin(), found.end()};
}

std::vector<Predicate> Theory::predicates() const {
  std::set<Predicate> found;
  for (const auto& f : facts) found.insert(f.literal.predicate);
  for (const auto& r : rules) {
    for (const auto& a : r.antecedents) found.insert(a.predicate);
    found.insert(r.consequent.predicate);
  }
  return {found.begin(), found.end()};
}

std::string predicate_key(const Predicate& predicate) {
  return predicate.name + "/" + std::to_string(predicate.arity);
}

}  // namespace htp

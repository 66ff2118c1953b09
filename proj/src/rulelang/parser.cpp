#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "htp/error.hpp"
#include "htp/rulelang.hpp"

namespace htp {

namespace {

constexpr std::array kReserved = {
    "all",  "and",  "are",    "by",   "do",      "does",      "false", "from",
    "if",   "is",   "it",     "not",  "people",  "someone",   "something",
    "them", "then", "they",   "things", "true",  "unknown",
};

constexpr std::array kSubjectVars = {"someone", "something", "they", "it"};
constexpr std::array kObjectVars = {"someone", "something", "it", "them"};

template <std::size_t N>
bool contains(const std::array<const char*, N>& words, std::string_view w) {
  return std::any_of(words.begin(), words.end(), [&](const char* x) { return w == x; });
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

struct Token {
  std::string text;  // lower-cased
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    unsigned char c = static_cast<unsigned char>(line[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (std::isalnum(c)) {
      std::size_t start = i;
      std::string word;
      while (i < line.size() && std::isalnum(static_cast<unsigned char>(line[i]))) {
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(line[i])));
        ++i;
      }
      out.push_back({std::move(word), start});
    } else if (c == '.' || c == ',') {
      out.push_back({std::string(1, static_cast<char>(c)), i});
      ++i;
    } else {
      throw ParseError("unexpected character '" + std::string(1, static_cast<char>(c)) + "'",
                       i, out.size(), {});
    }
  }
  return out;
}

class StatementParser {
 public:
  explicit StatementParser(std::string_view line) : line_(line), tokens_(tokenize(line)) {}

  Statement parse() {
    Statement result = [&]() -> Statement {
      if (peek_is("if")) return parse_if_rule();
      if (peek_is("all")) return parse_all_rule();
      return parse_fact();
    }();
    expect(".");
    if (index_ < tokens_.size()) fail("trailing input after '.'", {"<end of sentence>"});
    return result;
  }

 private:
  const Token* peek() const { return index_ < tokens_.size() ? &tokens_[index_] : nullptr; }
  bool peek_is(std::string_view w) const { return peek() && peek()->text == w; }

  bool accept(std::string_view w) {
    if (!peek_is(w)) return false;
    ++index_;
    return true;
  }

  void expect(std::string_view w) {
    if (!accept(w)) fail("unexpected token", {"'" + std::string(w) + "'"});
  }

  [[noreturn]] void fail(const std::string& what, std::vector<std::string> expected) const {
    std::size_t pos = peek() ? peek()->pos : line_.size();
    std::string found = peek() ? "'" + peek()->text + "'" : "end of input";
    throw ParseError(what + " at token " + std::to_string(index_) + " (" + found + ")", pos,
                     index_, std::move(expected));
  }

  static bool is_word(const Token& t) {
    return std::isalnum(static_cast<unsigned char>(t.text.front())) != 0;
  }

  std::string content_word(const char* category) {
    const Token* t = peek();
    if (!t || !is_word(*t) || is_reserved_word(t->text)) fail("unexpected token", {category});
    ++index_;
    return t->text;
  }

  Term subject(bool allow_variable) {
    const Token* t = peek();
    if (allow_variable && t && contains(kSubjectVars, t->text)) {
      ++index_;
      return Variable{};
    }
    return Entity{content_word("<entity>")};
  }

  Term object(bool allow_variable) {
    const Token* t = peek();
    if (allow_variable && t && contains(kObjectVars, t->text)) {
      ++index_;
      return Variable{};
    }
    return Entity{content_word("<entity>")};
  }

  // Parses the verb phrase after a subject. `plural` selects "are/do/<lemma>"
  // agreement (subject "they"), otherwise "is/does/<verb>s".
  Literal predicate_phrase(Term subj, bool plural, bool allow_variable) {
    const char* copula = plural ? "are" : "is";
    const char* aux = plural ? "do" : "does";
    if (accept(copula)) {
      Polarity pol = accept("not") ? Polarity::Negative : Polarity::Positive;
      std::string attr = content_word("<attribute>");
      return Literal{Predicate{attr, 1}, {std::move(subj)}, pol};
    }
    if (accept(aux)) {
      expect("not");
      std::string lemma = content_word("<verb>");
      Term obj = object(allow_variable);
      return Literal{Predicate{lemma, 2}, {std::move(subj), std::move(obj)}, Polarity::Negative};
    }
    const Token* t = peek();
    bool verb_ok = t && is_word(*t) && !is_reserved_word(t->text) &&
                   (plural || (t->text.size() > 1 && t->text.back() == 's'));
    if (!verb_ok) {
      fail("unexpected token", {std::string("'") + copula + "'", std::string("'") + aux + "'",
                                plural ? "<verb>" : "<verb>s"});
    }
    ++index_;
    std::string lemma = plural ? t->text : verb_lemma(t->text);
    Term obj = object(allow_variable);
    return Literal{Predicate{lemma, 2}, {std::move(subj), std::move(obj)}, Polarity::Positive};
  }

  Fact parse_fact() {
    const Token* t = peek();
    if (!t || !is_word(*t) || is_reserved_word(t->text)) {
      fail("unexpected token", {"'If'", "'All'", "<entity>"});
    }
    Term subj = subject(false);
    return Fact{"", predicate_phrase(std::move(subj), false, false)};
  }

  Literal condition() {
    const Token* t = peek();
    bool plural = t && t->text == "they";
    Term subj = subject(true);
    return predicate_phrase(std::move(subj), plural, true);
  }

  Rule parse_if_rule() {
    expect("if");
    Rule rule;
    rule.antecedents.push_back(condition());
    while (accept("and")) rule.antecedents.push_back(condition());
    expect("then");
    std::size_t consequent_token = index_;
    rule.consequent = condition();
    check_variable_scope(rule, consequent_token);
    return rule;
  }

  Rule parse_all_rule() {
    expect("all");
    Rule rule;
    rule.antecedents.push_back(var_attribute(content_word("<attribute>")));
    while (accept(",") || accept("and")) {
      rule.antecedents.push_back(var_attribute(content_word("<attribute>")));
    }
    if (!accept("people") && !accept("things")) {
      fail("unexpected token", {"','", "'and'", "'people'", "'things'"});
    }
    expect("are");
    Polarity pol = accept("not") ? Polarity::Negative : Polarity::Positive;
    rule.consequent = var_attribute(content_word("<attribute>"), pol);
    return rule;
  }

  void check_variable_scope(const Rule& rule, std::size_t consequent_token) const {
    if (!rule.consequent.has_variable()) return;
    bool bound = std::any_of(rule.antecedents.begin(), rule.antecedents.end(),
                             [](const Literal& l) { return l.has_variable(); });
    if (!bound) {
      throw ParseError("variable in consequent does not occur in any condition",
                       tokens_[consequent_token].pos, consequent_token,
                       {"<variable bound by a condition>"});
    }
  }

  std::string_view line_;
  std::vector<Token> tokens_;
  std::size_t index_ = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

class TheoryBuilder {
 public:
  void add(Statement statement, std::size_t line) {
    if (auto* fact = std::get_if<Fact>(&statement)) {
      if (!seen_.insert(fact->literal).second) {
        throw TheoryError("duplicate fact at line " + std::to_string(line));
      }
      fact->id = "F" + std::to_string(theory_.facts.size() + 1);
      theory_.facts.push_back(std::move(*fact));
    } else {
      auto& rule = std::get<Rule>(statement);
      rule.id = "R" + std::to_string(theory_.rules.size() + 1);
      theory_.rules.push_back(std::move(rule));
    }
  }

  Theory take() { return std::move(theory_); }

 private:
  Theory theory_;
  std::set<Literal> seen_;
};

}  // namespace

bool is_reserved_word(std::string_view word) { return contains(kReserved, word); }

std::string verb_lemma(std::string_view w) {
  for (std::string_view suffix : {"sses", "shes", "ches", "xes", "zes"}) {
    if (ends_with(w, suffix)) return std::string(w.substr(0, w.size() - 2));
  }
  if (ends_with(w, "s") && w.size() > 1) return std::string(w.substr(0, w.size() - 1));
  return std::string(w);
}

std::string verb_third_person(std::string_view lemma) {
  for (std::string_view suffix : {"s", "sh", "ch", "x", "z"}) {
    if (ends_with(lemma, suffix)) return std::string(lemma) + "es";
  }
  return std::string(lemma) + "s";
}

Statement parse_statement(std::string_view line) { return StatementParser(line).parse(); }

Literal parse_literal(std::string_view sentence) {
  Statement s = parse_statement(sentence);
  if (auto* f = std::get_if<Fact>(&s)) return std::move(f->literal);
  throw ParseError("expected a ground literal, found a rule", 0, 0, {"<entity>"});
}

Theory parse_theory(std::string_view text) {
  TheoryBuilder builder;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = trim(text.substr(start, end - start));
    if (!line.empty()) {
      try {
        builder.add(parse_statement(line), line_no);
      } catch (const ParseError& e) {
        throw e.at_line(line_no);
      }
    }
    start = end + 1;
  }
  return builder.take();
}

Theory theory_from_sentences(const std::vector<std::string>& facts,
                             const std::vector<std::string>& rules) {
  TheoryBuilder builder;
  std::size_t line_no = 0;
  auto add_all = [&](const std::vector<std::string>& lines, bool want_fact) {
    for (const auto& line : lines) {
      ++line_no;
      Statement s = [&] {
        try {
          return parse_statement(line);
        } catch (const ParseError& e) {
          throw e.at_line(line_no);
        }
      }();
      if (std::holds_alternative<Fact>(s) != want_fact) {
        throw ParseError(want_fact ? "expected a fact, found a rule"
                                   : "expected a rule, found a fact",
                         0, 0, {want_fact ? "<fact>" : "<rule>"})
            .at_line(line_no);
      }
      builder.add(std::move(s), line_no);
    }
  };
  add_all(facts, true);
  add_all(rules, false);
  return builder.take();
}

}  // namespace htp

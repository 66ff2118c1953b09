#include <algorithm>
#include <functional>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "htp/corpus.hpp"
#include "htp/error.hpp"
#include "json.hpp"

namespace htp {

using ojson = nlohmann::ordered_json;

Dialect parse_dialect(std::string_view text) {
  if (text == "ruletaker") return Dialect::RuleTaker;
  if (text == "proofwriter") return Dialect::ProofWriter;
  throw UsageError("unknown dialect '" + std::string(text) + "' (ruletaker|proofwriter)");
}

std::string ReconciliationReport::summary() const {
  std::ostringstream out;
  out << "records: " << records << "\nquestions: " << questions << "\nkept: " << kept
      << "\nskipped: " << skipped.size() << "\nlabel disagreements (excluded): "
      << disagreements.size() << "\ndepth mismatches (engine depth kept): "
      << depth_mismatches.size() << "\n";
  for (const auto& [id, why] : skipped) out << "  skip " << id << ": " << why << "\n";
  for (const auto& [id, why] : disagreements) out << "  disagree " << id << ": " << why << "\n";
  for (const auto& [id, why] : depth_mismatches) out << "  depth " << id << ": " << why << "\n";
  return out.str();
}

namespace {

// Raised for upstream content outside the supported language; the question
// or record is skipped and logged.
struct Unsupported {
  std::string reason;
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// S-expressions as used by the upstream "representation" fields:
//   ("Anne" "is" "big" "+")
//   ((("someone" "is" "big" "+") ("someone" "is" "red" "-")) -> ("someone" "is" "round" "+"))
struct SExpr {
  std::string atom;  // quoted string or "->"
  std::vector<SExpr> items;
  bool is_list = false;
};

SExpr parse_sexpr(const std::string& text) {
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  std::function<SExpr()> parse = [&]() -> SExpr {
    skip();
    if (i >= text.size()) throw Unsupported{"truncated representation"};
    if (text[i] == '(') {
      ++i;
      SExpr list;
      list.is_list = true;
      for (;;) {
        skip();
        if (i >= text.size()) throw Unsupported{"unbalanced representation"};
        if (text[i] == ')') {
          ++i;
          return list;
        }
        list.items.push_back(parse());
      }
    }
    if (text[i] == '"') {
      std::size_t end = text.find('"', i + 1);
      if (end == std::string::npos) throw Unsupported{"unterminated string in representation"};
      SExpr atom;
      atom.atom = text.substr(i + 1, end - i - 1);
      i = end + 1;
      return atom;
    }
    if (text.compare(i, 2, "->") == 0) {
      i += 2;
      SExpr arrow;
      arrow.atom = "->";
      return arrow;
    }
    throw Unsupported{"unexpected character in representation"};
  };
  SExpr out = parse();
  skip();
  if (i != text.size()) throw Unsupported{"trailing text in representation"};
  return out;
}

Term term_of(const std::string& raw, bool in_rule) {
  std::string s = lower(raw);
  if (s == "someone" || s == "something") {
    if (!in_rule) throw Unsupported{"variable outside a rule"};
    return Variable{};
  }
  if (s.rfind("the ", 0) == 0) s = s.substr(4);
  if (s.empty() || s.find(' ') != std::string::npos) throw Unsupported{"multi-word entity '" + raw + "'"};
  if (is_reserved_word(s)) throw Unsupported{"reserved word as entity '" + raw + "'"};
  return Entity{s};
}

Literal literal_of(const SExpr& triple, bool in_rule) {
  if (!triple.is_list || triple.items.size() != 4) throw Unsupported{"triple must have 4 parts"};
  for (const auto& part : triple.items) {
    if (part.is_list) throw Unsupported{"nested triple"};
  }
  const std::string verb = lower(triple.items[1].atom);
  const std::string sign = triple.items[3].atom;
  if (sign != "+" && sign != "-") throw Unsupported{"triple sign must be + or -"};
  Literal l;
  l.polarity = sign == "+" ? Polarity::Positive : Polarity::Negative;
  l.args.push_back(term_of(triple.items[0].atom, in_rule));
  if (verb == "is") {
    std::string attr = lower(triple.items[2].atom);
    if (attr.find(' ') != std::string::npos || is_reserved_word(attr)) {
      throw Unsupported{"attribute '" + attr + "'"};
    }
    l.predicate = Predicate{attr, 1};
  } else {
    if (verb.find(' ') != std::string::npos) throw Unsupported{"multi-word verb '" + verb + "'"};
    l.predicate = Predicate{verb_lemma(verb), 2};
    l.args.push_back(term_of(triple.items[2].atom, in_rule));
  }
  return l;
}

// Round-trips through the grammar so only expressible statements survive.
Statement checked(const Statement& s) {
  try {
    Statement back = parse_statement(render_statement(s));
    if (const auto* r = std::get_if<Rule>(&back)) {
      if (!r->same_form(std::get<Rule>(s))) throw Unsupported{"rule not expressible"};
    } else if (!(std::get<Fact>(back).literal == std::get<Fact>(s).literal)) {
      throw Unsupported{"fact not expressible"};
    }
    return back;
  } catch (const ParseError& e) {
    throw Unsupported{std::string("outside the grammar: ") + e.what()};
  }
}

Statement statement_from_representation(const std::string& repr, bool is_rule) {
  SExpr e = parse_sexpr(repr);
  if (!is_rule) return checked(Fact{"", literal_of(e, false)});
  if (!e.is_list || e.items.size() != 3 || e.items[1].atom != "->" || !e.items[0].is_list) {
    throw Unsupported{"rule representation must be (conditions -> conclusion)"};
  }
  Rule r;
  for (const auto& c : e.items[0].items) r.antecedents.push_back(literal_of(c, true));
  r.consequent = literal_of(e.items[2], true);
  if (r.antecedents.empty()) throw Unsupported{"rule without conditions"};
  return checked(r);
}

Statement statement_from_text(const std::string& text) {
  try {
    return parse_statement(text);
  } catch (const ParseError& e) {
    throw Unsupported{"sentence '" + text + "' outside the grammar"};
  }
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    start = text.find_first_not_of(" \n\t\r", start);
    if (start == std::string::npos) break;
    std::size_t end = text.find('.', start);
    if (end == std::string::npos) throw Unsupported{"unterminated sentence in theory text"};
    out.push_back(text.substr(start, end - start + 1));
    start = end + 1;
  }
  return out;
}

struct Builder {
  Theory theory;
  std::set<Literal> facts;

  void add(Statement s) {
    if (auto* f = std::get_if<Fact>(&s)) {
      if (!facts.insert(f->literal).second) return;
      f->id = "F" + std::to_string(theory.facts.size() + 1);
      theory.facts.push_back(std::move(*f));
    } else {
      auto& r = std::get<Rule>(s);
      r.id = "R" + std::to_string(theory.rules.size() + 1);
      theory.rules.push_back(std::move(r));
    }
  }
};

const ojson* member(const ojson& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

// Statements from "triples"/"rules" maps, preferring representations.
void add_structured(Builder& b, const ojson& map, bool is_rule, const std::string& path) {
  if (!map.is_object()) throw AdapterError("expected an object", path);
  for (const auto& [key, item] : map.items()) {
    const ojson* repr = member(item, "representation");
    const ojson* text = member(item, "text");
    if (repr && repr->is_string()) {
      b.add(statement_from_representation(repr->get<std::string>(), is_rule));
    } else if (text && text->is_string()) {
      Statement s = statement_from_text(text->get<std::string>());
      if (std::holds_alternative<Rule>(s) != is_rule) throw Unsupported{"statement kind mismatch"};
      b.add(std::move(s));
    } else {
      throw AdapterError("needs 'representation' or 'text'", path + "." + key);
    }
  }
}

Theory theory_of(const ojson& record, Dialect dialect, const std::string& path) {
  Builder b;
  const ojson* triples = member(record, "triples");
  const ojson* rules = member(record, "rules");
  if (triples && rules) {
    add_structured(b, *triples, false, path + ".triples");
    add_structured(b, *rules, true, path + ".rules");
    return b.theory;
  }
  const char* text_key = dialect == Dialect::RuleTaker ? "context" : "theory";
  const ojson* text = member(record, text_key);
  if (!text) text = member(record, dialect == Dialect::RuleTaker ? "theory" : "context");
  if (!text || !text->is_string()) {
    throw AdapterError("missing theory text or structured triples/rules", path + "." + text_key);
  }
  std::vector<Statement> facts, rule_list;
  for (const auto& sentence : split_sentences(text->get<std::string>())) {
    Statement s = statement_from_text(sentence);
    (std::holds_alternative<Fact>(s) ? facts : rule_list).push_back(std::move(s));
  }
  for (auto& s : facts) b.add(std::move(s));
  for (auto& s : rule_list) b.add(std::move(s));
  return b.theory;
}

std::optional<int> depth_digit(const std::string& text, const std::regex& re) {
  std::smatch m;
  if (std::regex_search(text, m, re)) return std::stoi(m[1].str());
  return std::nullopt;
}

int bucket_of(const ojson& record, const std::string& record_id, const std::string& source,
              const std::string& path) {
  static const std::regex kIdDepth(R"(-D(\d+)(?:-|$))");
  static const std::regex kPathDepth(R"(depth-(\d+))");
  std::optional<int> d;
  if (const ojson* maxd = member(record, "maxD"); maxd && maxd->is_number_integer()) {
    d = maxd->get<int>();
  }
  if (!d) d = depth_digit(record_id, kIdDepth);
  if (!d) d = depth_digit(source, kPathDepth);
  if (!d) throw AdapterError("cannot determine the depth bucket", path + ".maxD");
  try {
    return parse_bucket(std::to_string(*d));
  } catch (const UsageError&) {
    throw AdapterError("depth " + std::to_string(*d) + " is not one of the buckets", path + ".maxD");
  }
}

Split split_of(const std::string& source) {
  std::string s = lower(source);
  auto slash = s.find_last_of('/');
  std::string file = slash == std::string::npos ? s : s.substr(slash + 1);
  if (file.find("train") != std::string::npos) return Split::Train;
  if (file.find("dev") != std::string::npos) return Split::Dev;
  return Split::Test;
}

TruthValue label_of(const ojson& v, const std::string& path) {
  if (v.is_boolean()) return v.get<bool>() ? TruthValue::True : TruthValue::False;
  if (v.is_string()) {
    try {
      return parse_truth_value(v.get<std::string>());
    } catch (const UsageError&) {
    }
  }
  throw AdapterError("label must be true, false or \"Unknown\"", path);
}

struct Question {
  std::string id;
  std::string path;
  const ojson* text = nullptr;
  const ojson* representation = nullptr;
  const ojson* label = nullptr;
  std::optional<int> depth;
};

std::vector<Question> questions_of(const ojson& record, Dialect dialect, const std::string& rid,
                                   const std::string& path) {
  const ojson* qs = member(record, "questions");
  if (!qs) throw AdapterError("missing questions", path + ".questions");
  std::vector<Question> out;
  auto fill = [&](const ojson& q, const std::string& key, const std::string& qpath) {
    Question item;
    item.path = qpath;
    const ojson* id = member(q, "id");
    item.id = id && id->is_string() ? id->get<std::string>() : rid + "-" + key;
    item.text = member(q, "text");
    if (!item.text) item.text = member(q, "question");
    item.representation = member(q, "representation");
    item.label = dialect == Dialect::RuleTaker ? member(q, "label") : member(q, "answer");
    if (!item.label) item.label = member(q, dialect == Dialect::RuleTaker ? "answer" : "label");
    const ojson* qdep = member(q, "QDep");
    if (!qdep) {
      if (const ojson* meta = member(q, "meta")) qdep = member(*meta, "QDep");
    }
    if (qdep && qdep->is_number_integer()) item.depth = qdep->get<int>();
    if (!item.label) throw AdapterError("missing label", qpath + (dialect == Dialect::RuleTaker ? ".label" : ".answer"));
    if (!item.text && !item.representation) throw AdapterError("missing question text", qpath + ".text");
    out.push_back(item);
  };
  if (qs->is_array()) {
    for (std::size_t i = 0; i < qs->size(); ++i) {
      fill((*qs)[i], "Q" + std::to_string(i + 1), path + ".questions[" + std::to_string(i) + "]");
    }
  } else if (qs->is_object()) {
    for (const auto& [key, q] : qs->items()) fill(q, key, path + ".questions." + key);
  } else {
    throw AdapterError("questions must be an array or object", path + ".questions");
  }
  return out;
}

Literal conclusion_of(const Question& q) {
  if (q.representation && q.representation->is_string()) {
    return literal_of(parse_sexpr(q.representation->get<std::string>()), false);
  }
  if (!q.text->is_string()) throw AdapterError("question text must be a string", q.path + ".text");
  try {
    return parse_literal(q.text->get<std::string>());
  } catch (const ParseError&) {
    throw Unsupported{"question '" + q.text->get<std::string>() + "' outside the grammar"};
  }
}

}  // namespace

Adapted adapt_upstream(std::istream& in, Dialect dialect, const std::string& source_name) {
  Adapted out;
  out.corpus.name = source_name;
  const WorldAssumption wa =
      dialect == Dialect::RuleTaker ? WorldAssumption::CWA : WorldAssumption::OWA;
  const Split split = split_of(source_name);
  std::set<std::string> ids;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string path = "line " + std::to_string(n);
    ojson record;
    try {
      record = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      throw AdapterError(std::string("invalid JSON: ") + e.what(), path);
    }
    if (!record.is_object()) throw AdapterError("record must be an object", path);
    ++out.report.records;
    const ojson* rid_field = member(record, "id");
    std::string rid = rid_field && rid_field->is_string() ? rid_field->get<std::string>()
                                                          : "record" + std::to_string(n);
    int bucket = bucket_of(record, rid, source_name, path);
    std::vector<Question> questions = questions_of(record, dialect, rid, path);
    out.report.questions += questions.size();

    Theory theory;
    try {
      theory = theory_of(record, dialect, path);
      validate_theory(theory, wa);
    } catch (const Unsupported& u) {
      for (const auto& q : questions) out.report.skipped.emplace_back(q.id, u.reason);
      continue;
    } catch (const AdapterError&) {
      throw;
    } catch (const Error& e) {
      for (const auto& q : questions) out.report.skipped.emplace_back(q.id, e.what());
      continue;
    }
    std::optional<Closure> c;
    try {
      c.emplace(closure(theory, wa));
    } catch (const Error& e) {
      for (const auto& q : questions) out.report.skipped.emplace_back(q.id, e.what());
      continue;
    }

    for (const auto& q : questions) {
      Example e;
      e.id = q.id;
      e.bucket = bucket;
      e.assumption = wa;
      e.theory = theory;
      e.split = split;
      try {
        e.conclusion = conclusion_of(q);
      } catch (const Unsupported& u) {
        out.report.skipped.emplace_back(q.id, u.reason);
        continue;
      }
      TruthValue upstream = label_of(*q.label, q.path + (dialect == Dialect::RuleTaker ? ".label" : ".answer"));
      Verdict v = verdict(*c, e.conclusion);
      if (v.value != upstream) {
        out.report.disagreements.emplace_back(
            q.id, "upstream " + to_string(upstream) + ", engine " + to_string(v.value));
        continue;
      }
      if (v.depth && *v.depth > bucket) {
        out.report.disagreements.emplace_back(
            q.id, "engine depth " + std::to_string(*v.depth) + " exceeds bucket " + bucket_name(bucket));
        continue;
      }
      if (v.depth && q.depth && *q.depth != *v.depth) {
        out.report.depth_mismatches.emplace_back(
            q.id, "upstream " + std::to_string(*q.depth) + ", engine " + std::to_string(*v.depth));
      }
      e.gold_label = v.value;
      e.gold_depth = v.depth;
      if (!ids.insert(e.id).second) throw AdapterError("duplicate question id '" + e.id + "'", q.path);
      out.corpus.examples.push_back(std::move(e));
      ++out.report.kept;
    }
  }
  std::set<int> buckets;
  for (const auto& e : out.corpus.examples) buckets.insert(e.bucket);
  if (buckets.size() == 1) out.corpus.bucket = *buckets.begin();
  return out;
}

Adapted adapt_upstream(const std::string& path, Dialect dialect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return adapt_upstream(in, dialect, path);
}

}  // namespace htp

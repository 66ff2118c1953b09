#include <regex>
#include <set>
#include <sstream>

#include "htp/error.hpp"
#include "htp/hypotest.hpp"

namespace htp {

namespace {

std::string verdict_word(TruthValue v) { return to_string(v); }

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void render_canonical_phase(std::ostringstream& out, const PhaseTrace& p) {
  out << (p.hypothesis == Hypothesis::AssumeTrue ? "Assume TRUE:\n" : "Assume FALSE:\n");
  std::size_t k = 0;
  for (const auto& s : p.steps) out << "  step " << ++k << ": " << render_step(s) << "\n";
  out << "  result: " << (p.outcome == PhaseOutcome::Proved ? "PROVED" : "NOT PROVED") << "\n";
  if (p.outcome == PhaseOutcome::NotProved && !p.frontier.empty()) {
    out << "  frontier: [";
    for (std::size_t i = 0; i < p.frontier.size(); ++i) {
      if (i) out << "; ";
      out << render_literal(p.frontier[i]);
    }
    out << "]\n";
  }
}

}  // namespace

std::string render_step(const TraceStep& step) {
  std::string out = render_literal(step.conclusion) + " by ";
  if (const auto* f = std::get_if<FactCitation>(&step.citation)) {
    out += f->fact_id;
  } else if (const auto* r = std::get_if<RuleCitation>(&step.citation)) {
    out += r->rule_id + " from [";
    for (std::size_t i = 0; i < r->premises.size(); ++i) {
      if (i) out += "; ";
      out += render_literal(r->premises[i]);
    }
    out += "]";
  } else {
    out += "NAF";
  }
  return out;
}

namespace {

std::string quote(const Literal& l) { return "\"" + render_literal(l) + "\""; }

std::string join_quoted(const std::vector<Literal>& lits, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < lits.size(); ++i) {
    if (i) out += sep;
    out += quote(lits[i]);
  }
  return out;
}

void render_narrative_phase(std::ostringstream& out, const PhaseTrace& p, const Literal& goal,
                            const std::vector<std::string>& rule_text) {
  out << (p.hypothesis == Hypothesis::AssumeTrue ? "First" : " Then")
      << " assume the conclusion is "
      << (p.hypothesis == Hypothesis::AssumeTrue ? "True" : "False") << " and start from ";
  if (p.outcome == PhaseOutcome::NotProved) {
    out << quote(goal) << ". No facts or rules establish "
        << join_quoted(p.frontier.empty() ? std::vector<Literal>{goal} : p.frontier, " or ")
        << ", so it cannot be proved.";
    return;
  }
  bool first = true;
  for (const auto& s : p.steps) {
    if (std::holds_alternative<RuleCitation>(s.citation)) continue;
    if (!first) out << " and ";
    first = false;
    out << quote(s.conclusion);
    if (std::holds_alternative<ClosedWorldCitation>(s.citation)) {
      out << " (since " << quote(s.conclusion.complement()) << " cannot be proved)";
    }
  }
  out << ".";
  std::size_t k = 0;
  for (const auto& s : p.steps) {
    const auto* r = std::get_if<RuleCitation>(&s.citation);
    if (!r) continue;
    out << " From " << join_quoted(r->premises, " and ") << ", because the rules state that ";
    if (k < rule_text.size()) {
      out << "\"" << rule_text[k] << "\"";
    } else {
      out << "(" << r->rule_id << ")";
    }
    out << ", we get " << quote(s.conclusion) << ".";
    ++k;
  }
  out << " This proves " << quote(goal) << ".";
}

}  // namespace

std::string render_trace(const HTrace& trace, TraceStyle style, const Theory* theory) {
  std::ostringstream out;
  if (style == TraceStyle::Canonical) {
    out << "Hypothesis: " << render_literal(trace.conclusion) << "\n";
    out << "Assumption: " << to_string(trace.assumption) << "\n";
    render_canonical_phase(out, trace.phase_true);
    if (trace.phase_false) render_canonical_phase(out, *trace.phase_false);
    out << "Verdict: " << verdict_word(trace.verdict) << "\n";
    return out.str();
  }
  auto rule_sentences = [&](const PhaseTrace& p) {
    std::vector<std::string> sentences;
    if (!theory) return sentences;
    for (const auto& s : p.steps) {
      if (const auto* r = std::get_if<RuleCitation>(&s.citation)) {
        const Rule* rule = theory->find_rule(r->rule_id);
        sentences.push_back(rule ? render_statement(*rule) : r->rule_id);
      }
    }
    return sentences;
  };
  render_narrative_phase(out, trace.phase_true, trace.conclusion, rule_sentences(trace.phase_true));
  if (trace.phase_false) {
    render_narrative_phase(out, *trace.phase_false, trace.conclusion.complement(),
                           rule_sentences(*trace.phase_false));
  }
  out << " So the conclusion '" << render_literal(trace.conclusion) << "' is "
      << lower(verdict_word(trace.verdict)) << ".";
  return out.str();
}

namespace {

struct LineReader {
  std::vector<std::string> lines;
  std::size_t next = 0;

  explicit LineReader(std::string_view text) {
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string line(text.substr(start, end - start));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
      start = end + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
  }

  bool done() const { return next >= lines.size(); }
  int line_no() const { return static_cast<int>(next) + 1; }
  const std::string& peek() const { return lines[next]; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, 0, 0, {}).at_line(std::min(line_no(), static_cast<int>(lines.size()) + 1));
  }

  std::string expect_prefix(const std::string& prefix) {
    if (done()) fail("missing line starting with '" + prefix + "'");
    const std::string& l = lines[next];
    if (l.compare(0, prefix.size(), prefix) != 0) fail("expected '" + prefix + "'");
    ++next;
    return l.substr(prefix.size());
  }
};

Literal literal_at(const std::string& sentence, int line) {
  try {
    return parse_literal(sentence);
  } catch (const ParseError& e) {
    throw ParseError(std::string("bad sentence '") + sentence + "': " + e.what(), e.position(),
                     e.token(), e.expected())
        .at_line(line);
  }
}

std::vector<Literal> literal_list(const std::string& body, int line) {
  std::vector<Literal> out;
  if (body.empty()) return out;
  std::size_t start = 0;
  while (true) {
    std::size_t end = body.find("; ", start);
    out.push_back(literal_at(body.substr(start, end == std::string::npos ? end : end - start),
                             line));
    if (end == std::string::npos) break;
    start = end + 2;
  }
  return out;
}

PhaseTrace parse_phase(LineReader& in, Hypothesis h) {
  static const std::regex kStep(R"(  step (\d+): (.+\.) by (F\d+|NAF|R\d+ from \[(.*)\]))");
  PhaseTrace p;
  p.hypothesis = h;
  if (!in.expect_prefix(h == Hypothesis::AssumeTrue ? "Assume TRUE:" : "Assume FALSE:").empty()) {
    --in.next;
    in.fail("unexpected text after the phase header");
  }
  while (!in.done() && in.peek().rfind("  step ", 0) == 0) {
    const int line = in.line_no();
    std::smatch m;
    const std::string text = in.peek();
    if (!std::regex_match(text, m, kStep)) in.fail("malformed step");
    if (std::stoul(m[1].str()) != p.steps.size() + 1) in.fail("steps must be numbered 1, 2, ...");
    TraceStep s{literal_at(m[2].str(), line), ClosedWorldCitation{}};
    const std::string cite = m[3].str();
    if (cite[0] == 'F') {
      s.citation = FactCitation{cite};
    } else if (cite[0] == 'R') {
      s.citation = RuleCitation{cite.substr(0, cite.find(' ')), literal_list(m[4].str(), line)};
    }
    p.steps.push_back(std::move(s));
    ++in.next;
  }
  const std::string result = in.expect_prefix("  result: ");
  if (result == "PROVED") {
    p.outcome = PhaseOutcome::Proved;
  } else if (result == "NOT PROVED") {
    p.outcome = PhaseOutcome::NotProved;
  } else {
    --in.next;
    in.fail("result must be PROVED or NOT PROVED");
  }
  if (!in.done() && in.peek().rfind("  frontier: ", 0) == 0) {
    const int line = in.line_no();
    std::string body = in.expect_prefix("  frontier: ");
    if (p.outcome != PhaseOutcome::NotProved || body.size() < 2 || body.front() != '[' ||
        body.back() != ']') {
      --in.next;
      in.fail("malformed frontier");
    }
    p.frontier = literal_list(body.substr(1, body.size() - 2), line);
  }
  return p;
}

}  // namespace

HTrace parse_trace(std::string_view text) {
  LineReader in(text);
  HTrace t;
  {
    const int line = in.line_no();
    t.conclusion = literal_at(in.expect_prefix("Hypothesis: "), line);
    if (!t.conclusion.is_ground()) in.fail("hypothesis must be ground");
  }
  {
    std::string a = in.expect_prefix("Assumption: ");
    if (a == "CWA") {
      t.assumption = WorldAssumption::CWA;
    } else if (a == "OWA") {
      t.assumption = WorldAssumption::OWA;
    } else {
      --in.next;
      in.fail("assumption must be CWA or OWA");
    }
  }
  t.phase_true = parse_phase(in, Hypothesis::AssumeTrue);
  if (!in.done() && in.peek() == "Assume FALSE:") t.phase_false = parse_phase(in, Hypothesis::AssumeFalse);
  std::string v = in.expect_prefix("Verdict: ");
  if (v == "True") {
    t.verdict = TruthValue::True;
  } else if (v == "False") {
    t.verdict = TruthValue::False;
  } else if (v == "Unknown") {
    t.verdict = TruthValue::Unknown;
  } else {
    --in.next;
    in.fail("verdict must be True, False or Unknown");
  }
  if (!in.done()) in.fail("unexpected text after the verdict");
  return t;
}

namespace {

std::vector<std::string> quoted(const std::string& s) {
  static const std::regex kQuoted("\"([^\"]*)\"");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kQuoted); it != std::sregex_iterator();
       ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

[[noreturn]] void narrative_error(const std::string& message) {
  throw ParseError("narrative trace: " + message, 0, 0, {});
}

Literal narrative_literal(const std::string& sentence) {
  try {
    return parse_literal(sentence);
  } catch (const ParseError& e) {
    narrative_error("bad sentence '" + sentence + "': " + e.what());
  }
}

PhaseTrace narrative_phase(const std::string& body, Hypothesis h, const Theory& theory) {
  static const std::regex kRule(
      R"re(from ((?:"[^"]*"(?:\s+and\s+)?)+),\s*because the rules state that "([^"]*)",\s*we get "([^"]*)")re",
      std::regex::icase);
  static const std::regex kNaf(R"re("([^"]*)"\s*\(since "([^"]*)" cannot be proved\))re",
                               std::regex::icase);
  static const std::regex kNotProved(R"re(no facts or rules establish (.*?), so it cannot be proved)re",
                                     std::regex::icase);
  PhaseTrace p;
  p.hypothesis = h;
  std::smatch m;
  if (std::regex_search(body, m, kNotProved)) {
    p.outcome = PhaseOutcome::NotProved;
    for (const auto& s : quoted(m[1].str())) p.frontier.push_back(narrative_literal(s));
    return p;
  }
  p.outcome = PhaseOutcome::Proved;
  // Leaves: everything before the first rule application.
  std::size_t first_rule = body.size();
  if (std::regex_search(body, m, kRule)) first_rule = static_cast<std::size_t>(m.position(0));
  std::string leaves = body.substr(0, first_rule);
  if (auto proves = lower(leaves).find("this proves"); proves != std::string::npos) {
    leaves = leaves.substr(0, proves);
  }
  std::set<std::string> naf_text;
  for (auto it = std::sregex_iterator(leaves.begin(), leaves.end(), kNaf);
       it != std::sregex_iterator(); ++it) {
    naf_text.insert((*it)[2].str());
  }
  for (const auto& s : quoted(leaves)) {
    if (naf_text.count(s)) continue;
    Literal lit = narrative_literal(s);
    bool negated_by_failure = false;
    for (const auto& n : naf_text) {
      if (narrative_literal(n) == lit.complement()) negated_by_failure = true;
    }
    if (negated_by_failure) {
      p.steps.push_back({lit, ClosedWorldCitation{}});
      continue;
    }
    const Fact* fact = nullptr;
    for (const auto& f : theory.facts) {
      if (f.literal == lit) {
        fact = &f;
        break;
      }
    }
    if (!fact) narrative_error("'" + s + "' is not a fact of the theory");
    p.steps.push_back({lit, FactCitation{fact->id}});
  }
  for (auto it = std::sregex_iterator(body.begin(), body.end(), kRule);
       it != std::sregex_iterator(); ++it) {
    const auto& rm = *it;
    Rule stated;
    try {
      stated = std::get<Rule>(parse_statement(rm[2].str()));
    } catch (const std::exception&) {
      narrative_error("'" + rm[2].str() + "' is not a rule");
    }
    const Rule* rule = nullptr;
    for (const auto& r : theory.rules) {
      if (r.same_form(stated)) {
        rule = &r;
        break;
      }
    }
    if (!rule) narrative_error("rule '" + rm[2].str() + "' is not in the theory");
    std::vector<Literal> premises;
    for (const auto& s : quoted(rm[1].str())) premises.push_back(narrative_literal(s));
    p.steps.push_back({narrative_literal(rm[3].str()), RuleCitation{rule->id, premises}});
  }
  if (p.steps.empty()) narrative_error("proved phase without steps");
  return p;
}

}  // namespace

HTrace normalize_narrative(std::string_view text, const Theory& theory,
                           WorldAssumption assumption) {
  static const std::regex kSpace(R"(\s+)");
  static const std::regex kOpening(
      R"((First|Then) assume the conclusion is (True|False) and start from)", std::regex::icase);
  static const std::regex kFinal(R"re(So the conclusion ['"]([^'"]*)['"] is (true|false|unknown)\b)re",
                                 std::regex::icase);
  const std::string flat = std::regex_replace(std::string(text), kSpace, " ");

  HTrace t;
  t.assumption = assumption;
  std::smatch fm;
  std::size_t final_at = flat.size();
  for (auto it = std::sregex_iterator(flat.begin(), flat.end(), kFinal);
       it != std::sregex_iterator(); ++it) {
    fm = *it;
    final_at = static_cast<std::size_t>(fm.position(0));
  }
  if (final_at == flat.size()) narrative_error("missing final conclusion sentence");
  t.conclusion = narrative_literal(fm[1].str());
  t.verdict = parse_truth_value(fm[2].str());

  std::vector<std::pair<std::size_t, std::size_t>> openings;  // (position, end of match)
  std::vector<Hypothesis> kinds;
  for (auto it = std::sregex_iterator(flat.begin(), flat.begin() + static_cast<long>(final_at),
                                      kOpening);
       it != std::sregex_iterator(); ++it) {
    openings.emplace_back(static_cast<std::size_t>(it->position(0)),
                          static_cast<std::size_t>(it->position(0) + it->length(0)));
    kinds.push_back(lower((*it)[2].str()) == "true" ? Hypothesis::AssumeTrue
                                                    : Hypothesis::AssumeFalse);
  }
  if (openings.empty() || kinds[0] != Hypothesis::AssumeTrue) {
    narrative_error("missing the assume-True phase");
  }
  if (openings.size() > 2 || (openings.size() == 2 && kinds[1] != Hypothesis::AssumeFalse)) {
    narrative_error("phases out of order");
  }
  for (std::size_t i = 0; i < openings.size(); ++i) {
    std::size_t end = i + 1 < openings.size() ? openings[i + 1].first : final_at;
    std::string body = flat.substr(openings[i].second, end - openings[i].second);
    PhaseTrace p = narrative_phase(body, kinds[i], theory);
    if (i == 0) {
      t.phase_true = std::move(p);
    } else {
      t.phase_false = std::move(p);
    }
  }
  return t;
}

std::optional<HTrace> read_trace(std::string_view text, const Theory& theory,
                                 WorldAssumption assumption) {
  try {
    return parse_trace(text);
  } catch (const ParseError&) {
  }
  try {
    return normalize_narrative(text, theory, assumption);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace htp

#include "htp/promptkit.hpp"

#include <regex>
#include <sstream>

#include "htp/error.hpp"
#include "htp/hypotest.hpp"

namespace htp {

namespace {

const std::string kQuestionHead = "Judge the following conclusion '";
const std::string kQuestionMid =
    "' is true, false, or unknown, based on the following facts and rules:";

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string quote(const Literal& l) { return "\"" + render_literal(l) + "\""; }

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string to_string(PromptStyle style) {
  switch (style) {
    case PromptStyle::Standard: return "standard";
    case PromptStyle::CoT: return "cot";
    case PromptStyle::HypothesisTesting: return "ht";
  }
  return "standard";
}

PromptStyle parse_prompt_style(std::string_view text) {
  std::string t = lower(text);
  if (t == "standard") return PromptStyle::Standard;
  if (t == "cot" || t == "chain-of-thought") return PromptStyle::CoT;
  if (t == "ht" || t == "hypothesis-testing" || t == "hypothesistesting") {
    return PromptStyle::HypothesisTesting;
  }
  throw UsageError("unknown prompt style '" + std::string(text) + "' (standard|cot|ht)");
}

int default_shot_count(WorldAssumption assumption) {
  return assumption == WorldAssumption::CWA ? 4 : 6;
}

std::string question_text(const Theory& theory, const Literal& conclusion) {
  std::string q = kQuestionHead + render_literal(conclusion) + kQuestionMid;
  for (const auto& f : theory.facts) q += " " + render_statement(f);
  for (const auto& r : theory.rules) q += " " + render_statement(r);
  return q;
}

ParsedQuestion parse_question(std::string_view question) {
  std::string q = trim(question);
  if (q.rfind(kQuestionHead, 0) != 0) {
    throw ParseError("question does not start with the judgement template", 0, 0, {});
  }
  std::size_t mid = q.find(kQuestionMid);
  if (mid == std::string::npos) {
    throw ParseError("question lacks the facts-and-rules clause", 0, 0, {});
  }
  ParsedQuestion out;
  out.conclusion = parse_literal(q.substr(kQuestionHead.size(), mid - kQuestionHead.size()));
  std::string body = q.substr(mid + kQuestionMid.size());
  std::size_t start = 0;
  while (true) {
    start = body.find_first_not_of(' ', start);
    if (start == std::string::npos) break;
    std::size_t end = body.find('.', start);
    if (end == std::string::npos) throw ParseError("unterminated sentence in question", 0, 0, {});
    Statement s = parse_statement(std::string_view(body).substr(start, end - start + 1));
    if (auto* f = std::get_if<Fact>(&s)) {
      f->id = "F" + std::to_string(out.theory.facts.size() + 1);
      out.theory.facts.push_back(std::move(*f));
    } else {
      auto& r = std::get<Rule>(s);
      r.id = "R" + std::to_string(out.theory.rules.size() + 1);
      out.theory.rules.push_back(std::move(r));
    }
    start = end + 1;
  }
  return out;
}

std::string target_question_of(std::string_view prompt) {
  std::size_t q = std::string_view::npos;
  for (std::size_t at = prompt.find("Q: "); at != std::string_view::npos;
       at = prompt.find("Q: ", at + 1)) {
    if (at == 0 || prompt[at - 1] == '\n') q = at;
  }
  if (q == std::string_view::npos) throw ParseError("prompt has no question block", 0, 0, {});
  std::size_t end = prompt.find("\nA:", q);
  return trim(prompt.substr(q + 3, end == std::string_view::npos ? end : end - q - 3));
}

std::optional<PromptStyle> style_of(std::string_view prompt) {
  std::size_t a = prompt.find("\nA: ");
  if (a == std::string_view::npos) return std::nullopt;
  std::size_t end = prompt.find('\n', a + 4);
  std::string answer = trim(prompt.substr(a + 4, end == std::string_view::npos ? end : end - a - 4));
  if (answer == "True" || answer == "False" || answer == "Unknown") return PromptStyle::Standard;
  if (answer.rfind("First assume the conclusion is True", 0) == 0) {
    return PromptStyle::HypothesisTesting;
  }
  return PromptStyle::CoT;
}

std::string cot_rationale(const Theory& theory, const Literal& conclusion,
                          WorldAssumption assumption) {
  Closure c = closure(theory, assumption);
  Verdict v = verdict(c, conclusion);
  std::ostringstream out;
  if (!v.proof) {
    if (v.value == TruthValue::Unknown) {
      out << "Neither " << quote(conclusion) << " nor " << quote(conclusion.complement())
          << " can be derived from the facts and rules.";
    } else if (conclusion.positive()) {
      out << "The facts and rules do not derive " << quote(conclusion) << ".";
    } else {
      out << quote(conclusion.complement()) << " cannot be derived, so " << quote(conclusion)
          << " holds.";
    }
    return out.str();
  }
  bool first = true;
  for (const auto& s : v.proof->steps) {
    if (!first) out << " ";
    first = false;
    if (std::holds_alternative<FactRef>(s.justification)) {
      out << quote(s.conclusion) << " is given.";
    } else if (std::holds_alternative<NegationAsFailure>(s.justification)) {
      out << quote(s.conclusion) << " because " << quote(s.conclusion.complement())
          << " cannot be derived.";
    } else {
      const auto& app = std::get<RuleApplication>(s.justification);
      out << "By the rule \"" << render_statement(*theory.find_rule(app.rule_id)) << "\", ";
      for (std::size_t i = 0; i < app.premises.size(); ++i) {
        if (i) out << " and ";
        out << quote(app.premises[i]);
      }
      out << (app.premises.size() == 1 ? " gives " : " give ") << quote(s.conclusion) << ".";
    }
  }
  if (v.value == TruthValue::True) {
    out << " This shows " << quote(conclusion) << ".";
  } else {
    out << " This contradicts " << quote(conclusion) << ".";
  }
  return out.str();
}

Exemplar build_exemplar(const Theory& theory, const Literal& conclusion,
                        WorldAssumption assumption, PromptStyle style) {
  Exemplar e;
  e.question = question_text(theory, conclusion);
  e.answer = verdict(theory, assumption, conclusion).value;
  switch (style) {
    case PromptStyle::Standard:
      break;
    case PromptStyle::CoT:
      e.rationale = cot_rationale(theory, conclusion, assumption);
      break;
    case PromptStyle::HypothesisTesting: {
      HTrace t = hypothesis_test(theory, conclusion, assumption);
      if (t.verdict != e.answer) {
        throw TheoryError("hypothesis test and engine disagree on '" + render_literal(conclusion) +
                          "' (depth beyond the search bound?)");
      }
      e.rationale = render_trace(t, TraceStyle::Narrative, &theory);
      break;
    }
  }
  return e;
}

std::string answer_text(const Exemplar& exemplar) {
  if (!exemplar.rationale) return to_string(exemplar.answer);
  return *exemplar.rationale + " So the answer is " + to_string(exemplar.answer) + ".";
}

std::string render_prompt(const Prompt& prompt) {
  std::string out;
  for (const auto& e : prompt.exemplars) {
    out += "Q: " + e.question + "\nA: " + answer_text(e) + "\n\n";
  }
  out += "Q: " + prompt.target_question + "\nA:";
  return out;
}

std::optional<TruthValue> extract_answer(std::string_view completion) {
  static const std::regex kAnswer(
      R"re(the answer is\s*:?\s*(true|false|unknown)\b|the conclusion(?:\s*'[^']*'|\s*"[^"]*")?\s+is\s+(true|false|unknown)\b)re",
      std::regex::icase);
  static const std::regex kToken(R"(\b(true|false|unknown)\b)", std::regex::icase);
  const std::string text(completion);
  std::optional<TruthValue> found;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kAnswer);
       it != std::sregex_iterator(); ++it) {
    // "assume the conclusion is True" introduces a hypothesis, not an answer.
    auto before = lower(text.substr(0, static_cast<std::size_t>(it->position(0))));
    while (!before.empty() && before.back() == ' ') before.pop_back();
    if (before.size() >= 6 && before.compare(before.size() - 6, 6, "assume") == 0) continue;
    found = parse_truth_value((*it)[1].matched ? (*it)[1].str() : (*it)[2].str());
  }
  if (found) return found;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kToken);
       it != std::sregex_iterator(); ++it) {
    found = parse_truth_value((*it)[1].str());
  }
  return found;
}

}  // namespace htp

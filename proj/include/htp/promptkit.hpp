#pragma once

// Few-shot prompts in three styles (standard, chain of thought, hypothesis
// testing) and answer extraction from completion text.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "htp/engine.hpp"
#include "htp/rulelang.hpp"

namespace htp {

enum class PromptStyle { Standard, CoT, HypothesisTesting };

std::string to_string(PromptStyle style);          // "standard", "cot", "ht"
PromptStyle parse_prompt_style(std::string_view);  // throws UsageError

struct Exemplar {
  std::string question;
  std::optional<std::string> rationale;
  TruthValue answer = TruthValue::Unknown;
  bool operator==(const Exemplar&) const = default;
};

struct Prompt {
  std::vector<Exemplar> exemplars;
  std::string target_question;
  PromptStyle style = PromptStyle::Standard;
};

/// "Judge the following conclusion '<c>' is true, false, or unknown, based
/// on the following facts and rules: <facts> <rules>"
std::string question_text(const Theory& theory, const Literal& conclusion);

struct ParsedQuestion {
  Theory theory;
  Literal conclusion;
};

/// Inverse of question_text (facts and rules renumbered in order).
/// Throws ParseError.
ParsedQuestion parse_question(std::string_view question);

/// Question of the final "Q:" block of a rendered prompt. Throws ParseError.
std::string target_question_of(std::string_view prompt);

/// Style of a rendered prompt, judged from its first exemplar answer.
std::optional<PromptStyle> style_of(std::string_view prompt);

/// Forward narration of the engine proof (or of why none exists).
std::string cot_rationale(const Theory& theory, const Literal& conclusion,
                          WorldAssumption assumption);

/// Answer equals the engine verdict; hypothesis-testing rationale is the
/// narrative trace, whose verdict is checked against the engine.
Exemplar build_exemplar(const Theory& theory, const Literal& conclusion,
                        WorldAssumption assumption, PromptStyle style);

/// Answer block as it appears after "A: ".
std::string answer_text(const Exemplar& exemplar);

std::string render_prompt(const Prompt& prompt);

/// Last "the answer is X" / "the conclusion ... is X" match, else the last
/// standalone true/false/unknown token, else nullopt.
std::optional<TruthValue> extract_answer(std::string_view completion);

/// Default few-shot count: 4 under CWA (two per label), 6 under OWA.
int default_shot_count(WorldAssumption assumption);

}  // namespace htp

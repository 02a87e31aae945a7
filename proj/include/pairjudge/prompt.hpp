#pragma once

#include "pairjudge/sample.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pairjudge {

// Per-task instruction texts prepended to the task input. The separator is
// what joins prompt parts and is fixed per run (recorded in the config
// snapshot); the default is a single newline.
struct InstructionSet {
    std::string question_instruction; // question summarization
    std::string query_instruction;    // query-based summarization
    std::string dialog_instruction;   // dialog summarization
    std::string separator = "\n";
};

InstructionSet default_instructions();

// Throws config_error if any instruction is empty.
void validate_instructions(const InstructionSet& instructions);

struct PromptPart {
    std::string label;
    std::string text;
};

// A rendered prompt plus the labeled parts it was assembled from, kept for
// audit. `rendered` is always the parts' texts joined by `separator`.
struct Prompt {
    std::string rendered;
    std::vector<PromptPart> parts;
    std::optional<TaskKind> task;
    std::string separator;
    bool truncated = false;
};

// Assembles the summarization prompt for the sample's kind:
//   question summarization   -> [instruction, question]
//   query-based summarization-> [instruction, question, document]
//   dialog summarization     -> [instruction, flattened dialogue]
// Throws prompt_error if the sample does not validate for its kind.
Prompt build_summarization_prompt(const Sample& sample, const InstructionSet& instructions);

// "Speaker: utterance" lines in turn order, joined by single newlines.
std::string flatten_dialogue(const std::vector<DialogueTurn>& dialogue);

// The task input a judge sees as {context}: the question, the question plus
// document, or the flattened dialogue. Never the reference summary.
std::string judge_context(const Sample& sample);

inline constexpr const char* kVerdictTokenFirst = "[[A]]";
inline constexpr const char* kVerdictTokenSecond = "[[B]]";
inline constexpr const char* kVerdictTokenTie = "[[C]]";

// Judge prompt template. The assembled template is rubric + body +
// verdict_protocol joined by blank lines; the body must contain each of the
// {context}, {answer_1} and {answer_2} placeholders exactly once.
struct JudgePromptTemplate {
    std::string rubric;           // must name coherence, consistency, fluency, relevance
    std::string body;             // carries the three placeholders
    std::string verdict_protocol; // must define the three verdict tokens and no others
};

JudgePromptTemplate default_judge_template();

// Invariant checks for the template; empty result means valid.
std::vector<Violation> validate_judge_template(const JudgePromptTemplate& tmpl);

// Substitutes {context}, {answer_1}, {answer_2} (each exactly once) into the
// assembled template. answer_1 occupies the first presentation position;
// choosing which summary goes first is the caller's job. Throws prompt_error
// on an invalid template, an unresolved placeholder, or an empty answer.
Prompt build_judge_prompt(const JudgePromptTemplate& tmpl, const std::string& context,
                          const std::string& answer_1, const std::string& answer_2);

// Case-insensitive scan used by the anonymity check: returns the first of
// `names` found inside `text`, or nullopt.
std::optional<std::string> find_forbidden_name(const std::string& text,
                                               const std::vector<std::string>& names);

// Shortens the final (document / dialogue / question) part so the rendered
// prompt fits `char_budget` characters, setting the truncated flag. A budget
// of 0 means unlimited. If the other parts alone exceed the budget the last
// part is emptied and the prompt stays over budget, still flagged.
Prompt truncate_to_budget(Prompt prompt, std::size_t char_budget);

} // namespace pairjudge

#include "pairjudge/prompt.hpp"

#include "pairjudge/errors.hpp"

#include <algorithm>
#include <cctype>

namespace pairjudge {

namespace {

constexpr const char* kContextPlaceholder = "{context}";
constexpr const char* kAnswer1Placeholder = "{answer_1}";
constexpr const char* kAnswer2Placeholder = "{answer_2}";

// Blocks of the assembled judge template are joined with a blank line.
constexpr const char* kJudgeSeparator = "\n\n";

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    std::size_t pos = text.find(needle);
    while (pos != std::string::npos) {
        ++count;
        pos = text.find(needle, pos + needle.size());
    }
    return count;
}

std::string replace_once(std::string text, const std::string& placeholder,
                         const std::string& value) {
    const std::size_t pos = text.find(placeholder);
    if (pos == std::string::npos) {
        throw prompt_error("judge template is missing placeholder " + placeholder);
    }
    text.replace(pos, placeholder.size(), value);
    return text;
}

std::string render_parts(const std::vector<PromptPart>& parts, const std::string& separator) {
    std::string rendered;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            rendered += separator;
        }
        rendered += parts[i].text;
    }
    return rendered;
}

std::string lowercase(const std::string& text) {
    std::string out = text;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

InstructionSet default_instructions() {
    InstructionSet set;
    set.question_instruction =
        "Summarize the following consumer health question into one short "
        "question that preserves every medically relevant detail.";
    set.query_instruction =
        "Using the question and the document below, write a concise summary "
        "of the information in the document that answers the question.";
    set.dialog_instruction =
        "Write a short summary of the following conversation between a "
        "patient and a doctor, describing the patient's condition and the "
        "doctor's advice.";
    set.separator = "\n";
    return set;
}

void validate_instructions(const InstructionSet& instructions) {
    if (instructions.question_instruction.empty() || instructions.query_instruction.empty() ||
        instructions.dialog_instruction.empty()) {
        throw config_error("instructions: all three task instructions must be non-empty");
    }
}

std::string flatten_dialogue(const std::vector<DialogueTurn>& dialogue) {
    std::string out;
    for (std::size_t i = 0; i < dialogue.size(); ++i) {
        if (i > 0) {
            out += '\n';
        }
        out += dialogue[i].speaker + ": " + dialogue[i].utterance;
    }
    return out;
}

Prompt build_summarization_prompt(const Sample& sample, const InstructionSet& instructions) {
    const auto violations = validate_sample(sample);
    if (!violations.empty()) {
        throw prompt_error("sample '" + sample.id + "' is invalid for task " +
                           to_string(sample.task) + ": " + violations.front().to_string());
    }
    validate_instructions(instructions);

    Prompt prompt;
    prompt.task = sample.task;
    prompt.separator = instructions.separator;

    switch (sample.task) {
    case TaskKind::QuestionSummarization:
        prompt.parts = {{"instruction", instructions.question_instruction},
                        {"question", sample.question}};
        break;
    case TaskKind::QueryBasedSummarization:
        prompt.parts = {{"instruction", instructions.query_instruction},
                        {"question", sample.question},
                        {"document", sample.document}};
        break;
    case TaskKind::DialogSummarization:
        prompt.parts = {{"instruction", instructions.dialog_instruction},
                        {"dialogue", flatten_dialogue(sample.dialogue)}};
        break;
    }

    prompt.rendered = render_parts(prompt.parts, prompt.separator);
    return prompt;
}

std::string judge_context(const Sample& sample) {
    switch (sample.task) {
    case TaskKind::QuestionSummarization:
        return sample.question;
    case TaskKind::QueryBasedSummarization:
        return sample.question + "\n\n" + sample.document;
    case TaskKind::DialogSummarization:
        return flatten_dialogue(sample.dialogue);
    }
    return {};
}

JudgePromptTemplate default_judge_template() {
    JudgePromptTemplate tmpl;
    tmpl.rubric =
        "You are an impartial judge. Two AI assistants were each asked to "
        "summarize the same input, shown below. Compare the two summaries on "
        "four dimensions: coherence, consistency, fluency, and relevance to "
        "the input. Do not let the order of presentation, the length of a "
        "summary, or the assistants' names influence your decision.";
    tmpl.body =
        "[Input]\n"
        "{context}\n"
        "\n"
        "[The Start of Assistant A's Answer]\n"
        "{answer_1}\n"
        "[The End of Assistant A's Answer]\n"
        "\n"
        "[The Start of Assistant B's Answer]\n"
        "{answer_2}\n"
        "[The End of Assistant B's Answer]";
    tmpl.verdict_protocol =
        "Briefly explain your comparison, then finish with your verdict on "
        "the last line: \"[[A]]\" if Assistant A's answer is better, \"[[B]]\" "
        "if Assistant B's answer is better, or \"[[C]]\" for a tie.";
    return tmpl;
}

std::vector<Violation> validate_judge_template(const JudgePromptTemplate& tmpl) {
    std::vector<Violation> violations;

    const std::string rubric = lowercase(tmpl.rubric);
    for (const char* dimension : {"coherence", "consistency", "fluency", "relevance"}) {
        if (rubric.find(dimension) == std::string::npos) {
            violations.push_back({"rubric", std::string("does not mention ") + dimension});
        }
    }

    // The verdict protocol must define the three legal tokens and nothing
    // else that looks like a token.
    for (const char* token : {kVerdictTokenFirst, kVerdictTokenSecond, kVerdictTokenTie}) {
        if (tmpl.verdict_protocol.find(token) == std::string::npos) {
            violations.push_back({"verdict_protocol", std::string("does not define ") + token});
        }
    }
    std::size_t scan = tmpl.verdict_protocol.find("[[");
    while (scan != std::string::npos) {
        const std::size_t end = tmpl.verdict_protocol.find("]]", scan);
        if (end == std::string::npos) {
            break;
        }
        const std::string token = tmpl.verdict_protocol.substr(scan, end - scan + 2);
        if (token != kVerdictTokenFirst && token != kVerdictTokenSecond &&
            token != kVerdictTokenTie) {
            violations.push_back({"verdict_protocol", "defines extra token " + token});
        }
        scan = tmpl.verdict_protocol.find("[[", end);
    }

    const std::string assembled =
        tmpl.rubric + kJudgeSeparator + tmpl.body + kJudgeSeparator + tmpl.verdict_protocol;
    for (const char* placeholder : {kContextPlaceholder, kAnswer1Placeholder, kAnswer2Placeholder}) {
        const std::size_t count = count_occurrences(assembled, placeholder);
        if (count != 1) {
            violations.push_back({"body", std::string(placeholder) + " appears " +
                                              std::to_string(count) + " times (want 1)"});
        }
    }
    return violations;
}

Prompt build_judge_prompt(const JudgePromptTemplate& tmpl, const std::string& context,
                          const std::string& answer_1, const std::string& answer_2) {
    const auto violations = validate_judge_template(tmpl);
    if (!violations.empty()) {
        throw prompt_error("invalid judge template: " + violations.front().to_string());
    }
    if (answer_1.empty() || answer_2.empty()) {
        throw prompt_error("judge prompt requires two non-empty answers");
    }

    std::string body = tmpl.body;
    // Substitute into whichever block holds each placeholder; validation
    // guaranteed exactly one occurrence across the assembled template.
    std::string rubric = tmpl.rubric;
    std::string protocol = tmpl.verdict_protocol;
    auto substitute = [&](const std::string& placeholder, const std::string& value) {
        for (std::string* block : {&rubric, &body, &protocol}) {
            if (block->find(placeholder) != std::string::npos) {
                *block = replace_once(std::move(*block), placeholder, value);
                return;
            }
        }
        throw prompt_error("judge template is missing placeholder " + placeholder);
    };
    substitute(kContextPlaceholder, context);
    substitute(kAnswer1Placeholder, answer_1);
    substitute(kAnswer2Placeholder, answer_2);

    Prompt prompt;
    prompt.separator = kJudgeSeparator;
    prompt.parts = {{"rubric", rubric}, {"body", body}, {"verdict_protocol", protocol}};
    prompt.rendered = render_parts(prompt.parts, prompt.separator);

    for (const char* placeholder : {kContextPlaceholder, kAnswer1Placeholder, kAnswer2Placeholder}) {
        if (prompt.rendered.find(placeholder) != std::string::npos) {
            throw prompt_error(std::string("unresolved placeholder ") + placeholder +
                               " in rendered judge prompt");
        }
    }
    return prompt;
}

std::optional<std::string> find_forbidden_name(const std::string& text,
                                               const std::vector<std::string>& names) {
    const std::string haystack = lowercase(text);
    for (const auto& name : names) {
        if (name.empty()) {
            continue;
        }
        if (haystack.find(lowercase(name)) != std::string::npos) {
            return name;
        }
    }
    return std::nullopt;
}

Prompt truncate_to_budget(Prompt prompt, std::size_t char_budget) {
    if (char_budget == 0 || prompt.rendered.size() <= char_budget || prompt.parts.empty()) {
        return prompt;
    }

    const std::size_t excess = prompt.rendered.size() - char_budget;
    std::string& tail = prompt.parts.back().text;
    tail.resize(tail.size() > excess ? tail.size() - excess : 0);
    prompt.truncated = true;
    prompt.rendered = render_parts(prompt.parts, prompt.separator);
    return prompt;
}

} // namespace pairjudge

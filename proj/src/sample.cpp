#include "pairjudge/sample.hpp"

#include "pairjudge/errors.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace pairjudge {

namespace {

bool blank(const std::string& text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

} // namespace

std::string to_string(TaskKind kind) {
    switch (kind) {
    case TaskKind::QuestionSummarization:
        return "question_summarization";
    case TaskKind::QueryBasedSummarization:
        return "query_based_summarization";
    case TaskKind::DialogSummarization:
        return "dialog_summarization";
    }
    return "unknown";
}

TaskKind task_kind_from_string(const std::string& name) {
    if (name == "question_summarization" || name == "question") {
        return TaskKind::QuestionSummarization;
    }
    if (name == "query_based_summarization" || name == "query") {
        return TaskKind::QueryBasedSummarization;
    }
    if (name == "dialog_summarization" || name == "dialog") {
        return TaskKind::DialogSummarization;
    }
    throw schema_error("unknown task kind '" + name +
                       "' (expected question_summarization, "
                       "query_based_summarization, or dialog_summarization)");
}

std::vector<Violation> validate_sample(const Sample& sample) {
    std::vector<Violation> violations;
    auto require_nonempty = [&](const std::string& field, const std::string& value) {
        if (blank(value)) {
            violations.push_back({field, "empty"});
        }
    };
    const std::string absent_rule = "not allowed for task " + to_string(sample.task);
    auto require_absent = [&](const std::string& field, bool present) {
        if (present) {
            violations.push_back({field, absent_rule});
        }
    };

    require_nonempty("id", sample.id);

    switch (sample.task) {
    case TaskKind::QuestionSummarization:
        require_nonempty("question", sample.question);
        require_absent("document", !sample.document.empty());
        require_absent("dialogue", !sample.dialogue.empty());
        break;
    case TaskKind::QueryBasedSummarization:
        require_nonempty("question", sample.question);
        require_nonempty("document", sample.document);
        require_absent("dialogue", !sample.dialogue.empty());
        break;
    case TaskKind::DialogSummarization:
        require_absent("question", !sample.question.empty());
        require_absent("document", !sample.document.empty());
        if (sample.dialogue.empty()) {
            violations.push_back({"dialogue", "empty"});
        }
        for (std::size_t i = 0; i < sample.dialogue.size(); ++i) {
            const auto& turn = sample.dialogue[i];
            const std::string prefix = "dialogue[" + std::to_string(i) + "]";
            if (blank(turn.speaker)) {
                violations.push_back({prefix + ".speaker", "empty"});
            }
            if (blank(turn.utterance)) {
                violations.push_back({prefix + ".utterance", "empty"});
            }
        }
        break;
    }

    if (sample.reference_summary && blank(*sample.reference_summary)) {
        violations.push_back({"reference_summary", "present but empty"});
    }
    return violations;
}

std::vector<Violation> validate_sample_set(const SampleSet& set) {
    std::vector<Violation> violations;
    std::set<std::string> seen;
    for (const auto& sample : set.samples) {
        for (const auto& v : validate_sample(sample)) {
            violations.push_back({sample.id + "." + v.field, v.rule});
        }
        if (!seen.insert(sample.id).second) {
            violations.push_back({sample.id + ".id", "duplicate id"});
        }
    }
    return violations;
}

} // namespace pairjudge

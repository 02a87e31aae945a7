#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pairjudge {

// The three summarization task shapes the harness understands.
enum class TaskKind {
    QuestionSummarization,  // input: a consumer health question
    QueryBasedSummarization, // input: a question plus a reference document
    DialogSummarization,     // input: a patient/doctor dialogue
};

std::string to_string(TaskKind kind);

// Parses "question_summarization" etc.; also accepts the short aliases
// "question", "query", "dialog". Throws schema_error on anything else.
TaskKind task_kind_from_string(const std::string& name);

struct DialogueTurn {
    std::string speaker;
    std::string utterance;

    bool operator==(const DialogueTurn&) const = default;
};

// One dataset record. Which fields are populated depends on the task kind:
// question summarization has `question` only, query-based summarization has
// `question` and `document`, dialog summarization has `dialogue` only.
// `reference_summary` is optional everywhere; it is kept for audit output
// and never shown to a judge.
struct Sample {
    std::string id;
    TaskKind task = TaskKind::QuestionSummarization;
    std::string question;
    std::string document;
    std::vector<DialogueTurn> dialogue;
    std::optional<std::string> reference_summary;

    bool operator==(const Sample&) const = default;
};

struct Violation {
    std::string field;
    std::string rule;

    std::string to_string() const { return field + ": " + rule; }
    bool operator==(const Violation&) const = default;
};

// Checks the Sample invariants: field presence must match the task kind and
// required text fields must be non-empty after whitespace trimming. Returns
// one entry per violated rule; an empty list means the sample is valid.
std::vector<Violation> validate_sample(const Sample& sample);

struct Provenance {
    std::string source_path;
    std::string content_digest; // SHA-256 of the file bytes, hex
};

// An ordered, immutable collection of samples from one dataset file.
struct SampleSet {
    std::string dataset_name;
    TaskKind task = TaskKind::QuestionSummarization;
    std::vector<Sample> samples;
    Provenance provenance;

    std::size_t size() const { return samples.size(); }
};

// Set-level validation: per-sample violations (fields prefixed with the
// sample id) plus duplicate-id checks.
std::vector<Violation> validate_sample_set(const SampleSet& set);

} // namespace pairjudge

#pragma once

#include "pairjudge/backend_stack.hpp"
#include "pairjudge/config.hpp"
#include "pairjudge/judge.hpp"
#include "pairjudge/sample.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace pairjudge {

// Run directory layout. All artifacts are line-delimited records except the
// config snapshot.
struct RunPaths {
    std::filesystem::path root;

    std::filesystem::path snapshot() const { return root / "run_config.json"; }
    std::filesystem::path generations() const { return root / "generations.jsonl"; }
    std::filesystem::path verdicts() const { return root / "verdicts.jsonl"; }
    std::filesystem::path audit() const { return root / "audit.jsonl"; }
};

struct GenerationEntry {
    std::string dataset;
    std::string sample_id;
    std::string model;
    std::string summary;
    std::string request_digest;
    bool truncated = false;
    bool errored = false;
    std::string error_kind; // transport / protocol / timeout / other
    std::string error_message;
};

// (dataset, sample_id, model) -> entry. Complete when every scheduled pair
// is present or explicitly marked errored.
class GenerationStore {
public:
    using Key = std::tuple<std::string, std::string, std::string>;

    void insert(GenerationEntry entry);
    const GenerationEntry* find(const std::string& dataset, const std::string& sample_id,
                                const std::string& model) const;
    std::size_t size() const { return entries_.size(); }

    static GenerationStore load(const std::filesystem::path& journal_path);

private:
    std::map<Key, GenerationEntry> entries_;
};

// Hook polled before each journal append with the number of entries
// written so far; returning true stops the run, leaving the journal an
// exact prefix of the full schedule (used to simulate a kill in tests).
// nullptr never stops.
using StopHook = std::function<bool(std::size_t entries_flushed)>;

struct StageOptions {
    bool resume = false;
    StopHook stop = nullptr;
};

struct GenerationOutcome {
    std::size_t completed = 0;
    std::size_t skipped_existing = 0;
    std::size_t errored = 0;
    bool stopped_early = false;
};

struct EvaluationOutcome {
    std::size_t records = 0;
    std::size_t skipped_existing = 0;
    std::size_t skipped_missing = 0; // audit notes written for these
    std::size_t errored_verdicts = 0;
    bool stopped_early = false;
};

// Stage 1: one summary per (dataset sample x evaluated model), built from
// the task prompt and persisted to the generations journal in deterministic
// schedule order. Already-journaled entries are skipped on resume;
// per-entry backend failures become errored entries, never an abort.
GenerationOutcome run_generation(const RunConfig& config, const RunPaths& paths,
                                 BackendMap& backends, const StageOptions& options = {});

// Stage 2: for every sample and every (candidate, target) pair, two judge
// calls through judge_pair, persisted in deterministic schedule order.
// Comparisons whose generations are missing or errored are skipped with an
// audit note. No judge call is issued before both summaries exist.
EvaluationOutcome run_evaluation(const RunConfig& config, const RunPaths& paths,
                                 Backend& judge_backend, const StageOptions& options = {});

// Loads datasets as configured (including the optional seeded subsample).
std::vector<SampleSet> load_configured_datasets(const RunConfig& config,
                                                std::vector<std::string>* warnings = nullptr);

// Writes the materialized config snapshot; called before any backend work.
void write_snapshot(const RunConfig& config, const RunPaths& paths);

std::vector<ComparisonRecord> load_verdicts(const std::filesystem::path& journal_path);

} // namespace pairjudge

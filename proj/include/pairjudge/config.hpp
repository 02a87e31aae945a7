#pragma once

#include "pairjudge/backend.hpp"
#include "pairjudge/prompt.hpp"
#include "pairjudge/sample.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pairjudge {

struct DatasetSpec {
    std::string name;
    std::filesystem::path path;
    TaskKind task = TaskKind::QuestionSummarization;
    // Optional seeded subsample, e.g. "randomly select 200 data samples".
    std::optional<std::size_t> subsample_k;
    std::optional<std::uint64_t> subsample_seed; // defaults to the run seed
};

struct RunConfig {
    std::vector<DatasetSpec> datasets;
    std::vector<BackendConfig> models; // the evaluated models, target included
    std::string target_model;
    BackendConfig judge;
    InstructionSet instructions;
    JudgePromptTemplate judge_template;
    std::uint64_t seed = 0;
    int parallelism = 1;
    std::filesystem::path output_dir;
    std::filesystem::path cache_dir; // empty -> output_dir / "cache"
    bool cache_enabled = true;

    std::vector<std::string> model_names() const;
    const BackendConfig& model_config(const std::string& name) const;
    std::filesystem::path effective_cache_dir() const;
    // Everything that must never leak into a judge prompt: backend names,
    // model ids, dataset names.
    std::vector<std::string> forbidden_prompt_names() const;
};

// Command-line overrides; flags win over file values.
struct ConfigOverrides {
    std::optional<std::vector<std::string>> models; // restrict to these names
    std::optional<std::string> target_model;
    std::optional<std::string> judge_model; // name of a configured model to judge with
    std::optional<std::uint64_t> seed;
    std::optional<int> parallelism;
    std::optional<std::filesystem::path> cache_dir;
    std::optional<std::filesystem::path> output_dir;
};

// Loads and fully validates a run config, materializing every default
// (instructions, separator, judge temperature, verdict tokens). The literal
// path "demo" loads the built-in offline profile (deterministic mocks and a
// generated dataset). Validation problems throw config_error naming the
// offending key; non-fatal observations are appended to `warnings`.
RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {},
                      std::vector<std::string>* warnings = nullptr);

RunConfig parse_config_json(const nlohmann::json& root, const std::filesystem::path& base_dir,
                            const ConfigOverrides& overrides = {},
                            std::vector<std::string>* warnings = nullptr);

// The fully materialized snapshot written into the run directory before any
// backend call. Contains env-var *names* only, never secret values.
nlohmann::ordered_json config_snapshot(const RunConfig& config);

// The built-in demo profile: mock summarizer backends, a mock content
// judge, and a small generated question-summarization dataset written under
// the output directory on first use.
RunConfig demo_config(const std::filesystem::path& output_dir);

} // namespace pairjudge

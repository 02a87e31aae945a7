#include "pairjudge/backend_stack.hpp"
#include "pairjudge/config.hpp"
#include "pairjudge/dataset.hpp"
#include "pairjudge/journal.hpp"
#include "pairjudge/orchestrator.hpp"
#include "pairjudge/prompt.hpp"
#include "pairjudge/report.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace pairjudge;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CommonFlags {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::string> cache_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallelism;
    std::vector<std::string> models;
    std::optional<std::string> target_model;
    std::optional<std::string> judge_model;
    bool resume = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Run config file, or 'demo'")->required();
    cmd->add_option("--out", flags.out, "Output directory (overrides the config)");
    cmd->add_option("--cache-dir", flags.cache_dir, "Response cache directory");
    cmd->add_option("--seed", flags.seed, "Run seed");
    cmd->add_option("--parallelism", flags.parallelism, "Concurrent backend calls");
    cmd->add_option("--models", flags.models, "Restrict evaluation to these model names")
        ->delimiter(',');
    cmd->add_option("--target-model", flags.target_model, "Target model name");
    cmd->add_option("--judge-model", flags.judge_model,
                    "Judge with this configured model instead of the config's judge");
    cmd->add_flag("--resume", flags.resume, "Continue an interrupted run");
}

ConfigOverrides to_overrides(const CommonFlags& flags) {
    ConfigOverrides overrides;
    if (!flags.models.empty()) {
        overrides.models = flags.models;
    }
    overrides.target_model = flags.target_model;
    overrides.judge_model = flags.judge_model;
    overrides.seed = flags.seed;
    overrides.parallelism = flags.parallelism;
    if (flags.cache_dir) {
        overrides.cache_dir = *flags.cache_dir;
    }
    if (flags.out) {
        overrides.output_dir = *flags.out;
    }
    return overrides;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& warning : warnings) {
        std::cerr << "warning: " << warning << '\n';
    }
}

StackOptions stack_options(const RunConfig& config) {
    StackOptions options;
    if (config.cache_enabled) {
        options.cache = std::make_shared<ResponseCache>(config.effective_cache_dir());
    }
    return options;
}

int cmd_ingest_validate(const std::string& task_name, const std::string& path) {
    const TaskKind task = task_kind_from_string(task_name);

    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open dataset file: " << path << '\n';
        return kExitValidation;
    }

    std::size_t records = 0;
    std::vector<std::string> problems;
    std::map<std::string, std::size_t> first_line_of_id;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = "line " + std::to_string(line_number);
        try {
            const json record = json::parse(line);
            const Sample sample = sample_from_json(record, task, where);
            const auto [it, inserted] = first_line_of_id.emplace(sample.id, line_number);
            if (!inserted) {
                problems.push_back(where + ": duplicate id '" + sample.id + "' (first seen line " +
                                   std::to_string(it->second) + ")");
            }
            ++records;
        } catch (const json::exception& ex) {
            problems.push_back(where + ": invalid JSON: " + std::string(ex.what()));
        } catch (const schema_error& ex) {
            problems.push_back(ex.what());
        }
    }

    std::cout << records << " valid record(s), " << problems.size() << " violation(s)\n";
    for (const auto& problem : problems) {
        std::cout << "violation: " << problem << '\n';
    }
    if (records == 0 && problems.empty()) {
        std::cerr << "warning: dataset is empty\n";
    }
    return problems.empty() ? kExitOk : kExitValidation;
}

int cmd_ingest_sample(const std::string& task_name, const std::string& path, std::size_t k,
                      std::uint64_t seed) {
    std::vector<std::string> warnings;
    const SampleSet set = load_dataset(path, task_kind_from_string(task_name), &warnings);
    print_warnings(warnings);
    const SampleSet picked = subsample(set, k, seed);
    for (const auto& sample : picked.samples) {
        std::cout << sample.id << '\n';
    }
    return kExitOk;
}

int cmd_prompts_preview(const CommonFlags& flags, const std::string& sample_id,
                        const std::string& dataset_filter) {
    std::vector<std::string> warnings;
    const RunConfig config = load_config(flags.config_path, to_overrides(flags), &warnings);
    print_warnings(warnings);

    const auto datasets = load_configured_datasets(config, nullptr);
    for (const auto& set : datasets) {
        if (!dataset_filter.empty() && set.dataset_name != dataset_filter) {
            continue;
        }
        for (const auto& sample : set.samples) {
            if (sample.id != sample_id) {
                continue;
            }
            const Prompt prompt = build_summarization_prompt(sample, config.instructions);
            std::cout << "# summarization prompt (" << set.dataset_name << "/" << sample.id
                      << ", " << to_string(sample.task) << ")\n";
            for (const auto& part : prompt.parts) {
                std::cout << "--- part: " << part.label << " ---\n";
            }
            std::cout << prompt.rendered << "\n\n";

            const Prompt judge_prompt =
                build_judge_prompt(config.judge_template, judge_context(sample),
                                   "<first summary goes here>", "<second summary goes here>");
            std::cout << "# judge prompt (answers elided)\n" << judge_prompt.rendered << '\n';
            return kExitOk;
        }
    }
    std::cerr << "error: no sample with id '" << sample_id << "'";
    if (!dataset_filter.empty()) {
        std::cerr << " in dataset '" << dataset_filter << "'";
    }
    std::cerr << '\n';
    return kExitValidation;
}

int cmd_generate(const CommonFlags& flags) {
    std::vector<std::string> warnings;
    const RunConfig config = load_config(flags.config_path, to_overrides(flags), &warnings);
    print_warnings(warnings);

    const RunPaths paths{config.output_dir};
    const StackOptions options = stack_options(config);
    BackendMap backends;
    for (const auto& model : config.models) {
        backends[model.name] = build_backend_stack(model, options);
    }

    StageOptions stage;
    stage.resume = flags.resume;
    const GenerationOutcome outcome = run_generation(config, paths, backends, stage);
    std::cout << "generation: " << outcome.completed << " new entr"
              << (outcome.completed == 1 ? "y" : "ies") << ", " << outcome.skipped_existing
              << " already present, " << outcome.errored << " errored\n";
    std::cout << "journal: " << paths.generations().string() << '\n';
    return kExitOk;
}

int cmd_judge(const CommonFlags& flags) {
    std::vector<std::string> warnings;
    const RunConfig config = load_config(flags.config_path, to_overrides(flags), &warnings);
    print_warnings(warnings);

    const RunPaths paths{config.output_dir};
    const StackOptions options = stack_options(config);
    const auto judge_backend = build_backend_stack(config.judge, options);

    StageOptions stage;
    stage.resume = flags.resume;
    const EvaluationOutcome outcome = run_evaluation(config, paths, *judge_backend, stage);
    std::cout << "evaluation: " << outcome.records << " new record"
              << (outcome.records == 1 ? "" : "s") << ", " << outcome.skipped_existing
              << " already present, " << outcome.skipped_missing << " skipped, "
              << outcome.errored_verdicts << " errored\n";
    std::cout << "journal: " << paths.verdicts().string() << '\n';
    return kExitOk;
}

json load_snapshot(const RunPaths& paths) {
    std::ifstream in(paths.snapshot(), std::ios::binary);
    if (!in) {
        throw config_error("run directory has no snapshot: " + paths.snapshot().string() +
                           " (did generate/judge run here?)");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return json::parse(buffer.str());
}

int cmd_report(const std::string& run_dir, const std::string& format_name) {
    const TableFormat format = table_format_from_string(format_name);
    const RunPaths paths{run_dir};
    const json snapshot = load_snapshot(paths);

    std::vector<std::string> dataset_order;
    for (const auto& entry : snapshot.at("datasets")) {
        dataset_order.push_back(entry.at("name").get<std::string>());
    }
    const std::string target = snapshot.at("target_model").get<std::string>();
    const auto seed = snapshot.value("seed", std::uint64_t{0});

    const auto records = load_verdicts(paths.verdicts());
    const auto rows = win_rates(records);
    const std::string table = render_table(rows, format, dataset_order, target);

    const char* extension = format == TableFormat::Markdown
                                ? "md"
                                : (format == TableFormat::Csv ? "csv" : "json");
    const auto report_path = paths.root / (std::string("report.") + extension);
    {
        std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
        out << table;
    }

    // Per-row diagnostics: how often the judge tracked position instead of
    // content, plus bootstrap intervals around the percentages.
    ordered_json diagnostics = ordered_json::array();
    std::map<std::pair<std::string, std::string>, std::vector<ComparisonRecord>> groups;
    for (const auto& record : records) {
        groups[{record.candidate_model, record.dataset}].push_back(record);
    }
    for (const auto& [key, group] : groups) {
        ordered_json entry;
        entry["candidate"] = key.first;
        entry["dataset"] = key.second;
        entry["records"] = group.size();
        entry["position_flip_rate"] = position_flip_rate(group);
        const bool has_outcomes = std::any_of(group.begin(), group.end(), [](const auto& r) {
            return r.final.outcome != Outcome::Errored;
        });
        if (has_outcomes) {
            const BootstrapIntervals ci = bootstrap_ci(group, 0.95, 1000, seed);
            entry["win_ci_95"] = {ci.win.lo, ci.win.hi};
            entry["loss_ci_95"] = {ci.loss.lo, ci.loss.hi};
            entry["tie_ci_95"] = {ci.tie.lo, ci.tie.hi};
        }
        diagnostics.push_back(std::move(entry));
    }
    {
        std::ofstream out(paths.root / "diagnostics.json", std::ios::binary | std::ios::trunc);
        out << diagnostics.dump(2) << '\n';
    }

    std::cout << table;
    std::cerr << "report written to " << report_path.string() << '\n';
    return kExitOk;
}

FinalVerdict final_verdict_from_human_json(const json& value, const std::string& where) {
    FinalVerdict verdict;
    try {
        verdict.outcome = outcome_from_string(value.at("final").at("outcome").get<std::string>());
        verdict.unparseable_flagged = value.at("final").value("unparseable_flagged", false);
    } catch (const json::exception& ex) {
        throw journal_error(where + ": bad human verdict: " + ex.what());
    }
    return verdict;
}

int cmd_agreement(const std::string& run_dir, const std::string& human_path) {
    const RunPaths paths{run_dir};
    const auto records = load_verdicts(paths.verdicts());

    using Key = std::tuple<std::string, std::string, std::string, std::string>;
    std::map<Key, FinalVerdict> judge_by_key;
    for (const auto& record : records) {
        judge_by_key[{record.dataset, record.sample_id, record.candidate_model,
                      record.target_model}] = record.final;
    }

    // Human files share the verdict journal's record shape (plus a
    // `source: human` marker); only the keys and final outcome are needed.
    std::vector<FinalVerdict> judge_verdicts;
    std::vector<FinalVerdict> human_verdicts;
    std::size_t human_lines = 0;
    std::size_t unmatched = 0;
    std::size_t errored_dropped = 0;
    for (const auto& line : journal::read_all(human_path)) {
        ++human_lines;
        const std::string where = human_path + " record " + std::to_string(human_lines);
        Key key;
        try {
            key = {line.at("dataset").get<std::string>(), line.at("sample_id").get<std::string>(),
                   line.at("candidate_model").get<std::string>(),
                   line.at("target_model").get<std::string>()};
        } catch (const json::exception& ex) {
            throw journal_error(where + ": bad human record key: " + ex.what());
        }
        const FinalVerdict human = final_verdict_from_human_json(line, where);
        const auto it = judge_by_key.find(key);
        if (it == judge_by_key.end()) {
            ++unmatched;
            continue;
        }
        if (human.outcome == Outcome::Errored || it->second.outcome == Outcome::Errored) {
            ++errored_dropped;
            continue;
        }
        judge_verdicts.push_back(it->second);
        human_verdicts.push_back(human);
    }

    if (judge_verdicts.empty()) {
        std::cerr << "error: no overlapping (sample, pair) keys between the run and " << human_path
                  << '\n';
        return kExitValidation;
    }

    const AgreementReport report = agreement_metrics(judge_verdicts, human_verdicts);

    ordered_json out;
    out["n_pairs"] = report.n_pairs;
    out["accuracy"] = report.accuracy;
    out["macro_f1"] = report.macro_f1;
    out["f1_averaging"] = "macro";
    out["classes"] = {"candidate_win", "target_win", "tie"};
    out["confusion_human_rows_judge_cols"] = report.confusion;
    out["human_records"] = human_lines;
    out["unmatched_human_records"] = unmatched;
    out["errored_pairs_dropped"] = errored_dropped;
    {
        std::ofstream file(paths.root / "agreement.json", std::ios::binary | std::ios::trunc);
        file << out.dump(2) << '\n';
    }

    std::cout << "pairs compared: " << report.n_pairs << '\n';
    std::cout << "accuracy:       " << report.accuracy << '\n';
    std::cout << "macro F1:       " << report.macro_f1 << '\n';
    std::cout << "confusion (rows = human, cols = judge; CW/TW/Tie):\n";
    for (const auto& row : report.confusion) {
        std::cout << "  " << row[0] << ' ' << row[1] << ' ' << row[2] << '\n';
    }
    if (unmatched > 0) {
        std::cerr << "warning: " << unmatched << " human record(s) had no matching run record\n";
    }
    if (errored_dropped > 0) {
        std::cerr << "note: " << errored_dropped << " pair(s) dropped because a side was errored\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reference-free pairwise LLM evaluation for medical summarization"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Dataset loading and subsampling");
    ingest->require_subcommand(1);
    std::string ingest_task;
    std::string ingest_path;
    auto* validate = ingest->add_subcommand("validate", "Check a dataset file");
    validate->add_option("--task", ingest_task, "Task kind")->required();
    validate->add_option("path", ingest_path, "Dataset file")->required();

    std::string sample_task;
    std::string sample_path;
    std::size_t sample_k = 0;
    std::uint64_t sample_seed = 0;
    auto* sample_cmd = ingest->add_subcommand("sample", "Print a deterministic subsample's ids");
    sample_cmd->add_option("--task", sample_task, "Task kind")->required();
    sample_cmd->add_option("--k", sample_k, "Number of samples to draw")->required();
    sample_cmd->add_option("--seed", sample_seed, "Subsample seed")->required();
    sample_cmd->add_option("path", sample_path, "Dataset file")->required();

    // prompts
    auto* prompts = app.add_subcommand("prompts", "Prompt assembly audit");
    prompts->require_subcommand(1);
    CommonFlags preview_flags;
    std::string preview_sample;
    std::string preview_dataset;
    auto* preview = prompts->add_subcommand("preview", "Render the prompts for one sample");
    add_common_flags(preview, preview_flags);
    preview->add_option("--sample", preview_sample, "Sample id")->required();
    preview->add_option("--dataset", preview_dataset, "Dataset name (when ids are ambiguous)");

    // generate / judge
    CommonFlags generate_flags;
    auto* generate = app.add_subcommand("generate", "Stage 1: summarize every sample");
    add_common_flags(generate, generate_flags);

    CommonFlags judge_flags;
    auto* judge = app.add_subcommand("judge", "Stage 2: pairwise judging");
    add_common_flags(judge, judge_flags);

    // report / agreement
    std::string report_run;
    std::string report_format = "md";
    auto* report = app.add_subcommand("report", "Win-rate table and diagnostics");
    report->add_option("--run", report_run, "Run directory")->required();
    report->add_option("--format", report_format, "md | csv | json");

    std::string agreement_run;
    std::string agreement_human;
    auto* agreement = app.add_subcommand("agreement", "Judge-vs-human agreement metrics");
    agreement->add_option("--run", agreement_run, "Run directory")->required();
    agreement->add_option("--human", agreement_human, "Human verdict file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (validate->parsed()) {
            return cmd_ingest_validate(ingest_task, ingest_path);
        }
        if (sample_cmd->parsed()) {
            return cmd_ingest_sample(sample_task, sample_path, sample_k, sample_seed);
        }
        if (preview->parsed()) {
            return cmd_prompts_preview(preview_flags, preview_sample, preview_dataset);
        }
        if (generate->parsed()) {
            return cmd_generate(generate_flags);
        }
        if (judge->parsed()) {
            return cmd_judge(judge_flags);
        }
        if (report->parsed()) {
            return cmd_report(report_run, report_format);
        }
        if (agreement->parsed()) {
            return cmd_agreement(agreement_run, agreement_human);
        }
    } catch (const config_error& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitValidation;
    } catch (const schema_error& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitValidation;
    } catch (const error& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

#include "pairjudge/orchestrator.hpp"

#include "pairjudge/dataset.hpp"
#include "pairjudge/journal.hpp"
#include "pairjudge/ordered_executor.hpp"
#include "pairjudge/prompt.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

namespace pairjudge {

using nlohmann::json;
using nlohmann::ordered_json;

void GenerationStore::insert(GenerationEntry entry) {
    Key key{entry.dataset, entry.sample_id, entry.model};
    entries_[std::move(key)] = std::move(entry);
}

const GenerationEntry* GenerationStore::find(const std::string& dataset,
                                             const std::string& sample_id,
                                             const std::string& model) const {
    const auto it = entries_.find(Key{dataset, sample_id, model});
    return it == entries_.end() ? nullptr : &it->second;
}

GenerationStore GenerationStore::load(const std::filesystem::path& journal_path) {
    GenerationStore store;
    for (const auto& line : journal::read_all(journal_path)) {
        GenerationEntry entry;
        try {
            entry.dataset = line.at("dataset").get<std::string>();
            entry.sample_id = line.at("sample_id").get<std::string>();
            entry.model = line.at("model").get<std::string>();
            const std::string status = line.at("status").get<std::string>();
            entry.errored = status == "errored";
            if (entry.errored) {
                entry.error_kind = line.value("error_kind", "");
                entry.error_message = line.value("error_message", "");
            } else {
                entry.summary = line.at("summary").get<std::string>();
                entry.request_digest = line.at("request_digest").get<std::string>();
                entry.truncated = line.value("truncated", false);
            }
        } catch (const json::exception& ex) {
            throw journal_error(journal_path.string() + ": bad generation entry: " + ex.what());
        }
        store.insert(std::move(entry));
    }
    return store;
}

namespace {

ordered_json generation_entry_to_json(const GenerationEntry& entry) {
    ordered_json out;
    out["dataset"] = entry.dataset;
    out["sample_id"] = entry.sample_id;
    out["model"] = entry.model;
    out["status"] = entry.errored ? "errored" : "ok";
    if (entry.errored) {
        out["error_kind"] = entry.error_kind;
        out["error_message"] = entry.error_message;
    } else {
        out["summary"] = entry.summary;
        out["request_digest"] = entry.request_digest;
        out["truncated"] = entry.truncated;
    }
    return out;
}

std::string classify_backend_error(const backend_error& ex) {
    if (dynamic_cast<const timeout_error*>(&ex)) {
        return "timeout";
    }
    if (dynamic_cast<const protocol_error*>(&ex)) {
        return "protocol";
    }
    if (dynamic_cast<const unscripted_request_error*>(&ex)) {
        return "unscripted";
    }
    if (dynamic_cast<const transport_error*>(&ex)) {
        return "transport";
    }
    return "backend";
}

// Snapshot equality guards resume: finishing a run under a different config
// would silently blend two experiments.
void ensure_snapshot(const RunConfig& config, const RunPaths& paths, bool resume) {
    const ordered_json current = config_snapshot(config);
    const auto path = paths.snapshot();
    if (std::filesystem::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        json existing;
        try {
            existing = json::parse(buffer.str());
        } catch (const json::exception& ex) {
            throw config_error("corrupt run snapshot " + path.string() + ": " + ex.what());
        }
        if (json(current) != existing) {
            throw config_error("run directory " + paths.root.string() +
                               " was started with a different config; refusing to continue");
        }
        if (!resume) {
            return; // same config, idempotent start
        }
        return;
    }
    std::filesystem::create_directories(paths.root);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw config_error("cannot write run snapshot: " + path.string());
    }
    out << current.dump(2) << '\n';
}

// Audit notes are keyed so resumed runs do not duplicate them.
class AuditLog {
public:
    explicit AuditLog(const std::filesystem::path& path) : path_(path) {
        for (const auto& line : journal::read_all(path)) {
            if (line.contains("key")) {
                seen_.insert(line.at("key").get<std::string>());
            }
        }
    }

    void note(const std::string& key, ordered_json record) {
        if (!seen_.insert(key).second) {
            return;
        }
        if (!writer_) {
            writer_ = std::make_unique<journal::Writer>(path_);
        }
        record["key"] = key;
        writer_->append(record);
    }

private:
    std::filesystem::path path_;
    std::set<std::string> seen_;
    std::unique_ptr<journal::Writer> writer_;
};

} // namespace

std::vector<SampleSet> load_configured_datasets(const RunConfig& config,
                                                std::vector<std::string>* warnings) {
    std::vector<SampleSet> sets;
    sets.reserve(config.datasets.size());
    for (const auto& spec : config.datasets) {
        SampleSet set = load_dataset(spec.path, spec.task, warnings);
        set.dataset_name = spec.name;
        if (spec.subsample_k) {
            set = subsample(set, *spec.subsample_k, spec.subsample_seed.value_or(config.seed));
        }
        sets.push_back(std::move(set));
    }
    return sets;
}

void write_snapshot(const RunConfig& config, const RunPaths& paths) {
    ensure_snapshot(config, paths, false);
}

GenerationOutcome run_generation(const RunConfig& config, const RunPaths& paths,
                                 BackendMap& backends, const StageOptions& options) {
    ensure_snapshot(config, paths, options.resume);

    const GenerationStore existing = GenerationStore::load(paths.generations());
    if (existing.size() > 0 && !options.resume) {
        throw config_error("generations journal already has entries; pass --resume to continue " +
                           paths.root.string());
    }
    for (const auto& model : config.models) {
        if (!backends.count(model.name)) {
            throw config_error("no backend instance supplied for model '" + model.name + "'");
        }
    }

    std::vector<std::string> warnings;
    const std::vector<SampleSet> datasets = load_configured_datasets(config, &warnings);
    AuditLog audit(paths.audit());
    for (const auto& warning : warnings) {
        audit.note("warning:" + warning, {{"kind", "warning"}, {"message", warning}});
    }

    GenerationOutcome outcome;
    std::vector<std::function<GenerationEntry()>> jobs;
    for (const auto& set : datasets) {
        for (const auto& sample : set.samples) {
            for (const auto& model : config.models) {
                if (existing.find(set.dataset_name, sample.id, model.name) != nullptr) {
                    ++outcome.skipped_existing;
                    continue;
                }
                Backend* backend = backends.at(model.name).get();
                const Sample* sample_ptr = &sample;
                const std::string dataset_name = set.dataset_name;
                jobs.push_back([&config, backend, sample_ptr, dataset_name, &model] {
                    GenerationEntry entry;
                    entry.dataset = dataset_name;
                    entry.sample_id = sample_ptr->id;
                    entry.model = model.name;
                    try {
                        Prompt prompt =
                            build_summarization_prompt(*sample_ptr, config.instructions);
                        prompt = truncate_to_budget(prompt, model.prompt_char_limit);
                        CompletionRequest request;
                        request.backend_name = model.name;
                        request.messages = {{Role::User, prompt.rendered}};
                        request.temperature = model.temperature;
                        request.max_tokens = model.max_tokens;
                        const CompletionResult result = backend->complete(request);
                        entry.summary = result.text;
                        entry.request_digest = result.request_digest;
                        entry.truncated = prompt.truncated;
                    } catch (const backend_error& ex) {
                        entry.errored = true;
                        entry.error_kind = classify_backend_error(ex);
                        entry.error_message = ex.what();
                    }
                    return entry;
                });
            }
        }
    }

    journal::Writer writer(paths.generations());
    std::atomic<std::size_t> flushed{0};
    std::atomic<std::size_t> errored{0};
    std::function<bool()> stop;
    if (options.stop) {
        stop = [&flushed, &options] { return options.stop(flushed.load()); };
    }
    const std::size_t delivered = run_ordered<GenerationEntry>(
        static_cast<std::size_t>(config.parallelism), jobs,
        [&](std::size_t, GenerationEntry&& entry) {
            if (entry.errored) {
                ++errored;
            }
            writer.append(generation_entry_to_json(entry));
            ++flushed;
        },
        stop);

    outcome.completed = delivered;
    outcome.errored = errored.load();
    outcome.stopped_early = delivered < jobs.size();
    return outcome;
}

EvaluationOutcome run_evaluation(const RunConfig& config, const RunPaths& paths,
                                 Backend& judge_backend, const StageOptions& options) {
    ensure_snapshot(config, paths, options.resume);

    const GenerationStore store = GenerationStore::load(paths.generations());
    const auto schedule = schedule_comparisons(config.model_names(), config.target_model);

    std::set<std::tuple<std::string, std::string, std::string>> existing_keys;
    for (const auto& record : load_verdicts(paths.verdicts())) {
        existing_keys.insert({record.dataset, record.sample_id, record.candidate_model});
    }
    if (!existing_keys.empty() && !options.resume) {
        throw config_error("verdicts journal already has entries; pass --resume to continue " +
                           paths.root.string());
    }

    std::vector<std::string> warnings;
    const std::vector<SampleSet> datasets = load_configured_datasets(config, &warnings);
    AuditLog audit(paths.audit());

    JudgeOptions judge_options;
    judge_options.prompt_template = config.judge_template;
    judge_options.forbidden_names = config.forbidden_prompt_names();
    judge_options.context_char_limit = config.judge.prompt_char_limit;

    EvaluationOutcome outcome;
    std::vector<std::function<ComparisonRecord()>> jobs;
    for (const auto& set : datasets) {
        for (const auto& sample : set.samples) {
            for (const auto& [candidate, target] : schedule) {
                if (existing_keys.count({set.dataset_name, sample.id, candidate})) {
                    ++outcome.skipped_existing;
                    continue;
                }
                const GenerationEntry* candidate_entry =
                    store.find(set.dataset_name, sample.id, candidate);
                const GenerationEntry* target_entry =
                    store.find(set.dataset_name, sample.id, target);

                std::string skip_reason;
                if (candidate_entry == nullptr) {
                    skip_reason = "missing generation for candidate " + candidate;
                } else if (candidate_entry->errored) {
                    skip_reason = "errored generation for candidate " + candidate;
                } else if (target_entry == nullptr) {
                    skip_reason = "missing generation for target " + target;
                } else if (target_entry->errored) {
                    skip_reason = "errored generation for target " + target;
                }
                if (!skip_reason.empty()) {
                    ++outcome.skipped_missing;
                    audit.note("skip:" + set.dataset_name + ":" + sample.id + ":" + candidate,
                               {{"kind", "comparison_skipped"},
                                {"dataset", set.dataset_name},
                                {"sample_id", sample.id},
                                {"candidate_model", candidate},
                                {"target_model", target},
                                {"reason", skip_reason}});
                    continue;
                }

                const Sample* sample_ptr = &sample;
                const std::string dataset_name = set.dataset_name;
                const std::string candidate_name = candidate;
                const std::string target_name = target;
                jobs.push_back([&judge_backend, &judge_options, sample_ptr, dataset_name,
                                candidate_name, target_name, candidate_entry, target_entry] {
                    JudgeTask task;
                    task.sample = sample_ptr;
                    task.dataset = dataset_name;
                    task.candidate_model = candidate_name;
                    task.target_model = target_name;
                    task.candidate_summary = candidate_entry->summary;
                    task.target_summary = target_entry->summary;
                    return judge_pair(judge_backend, judge_options, task);
                });
            }
        }
    }

    journal::Writer writer(paths.verdicts());
    std::atomic<std::size_t> flushed{0};
    std::atomic<std::size_t> errored{0};
    std::function<bool()> stop;
    if (options.stop) {
        stop = [&flushed, &options] { return options.stop(flushed.load()); };
    }
    const std::size_t delivered = run_ordered<ComparisonRecord>(
        static_cast<std::size_t>(config.parallelism), jobs,
        [&](std::size_t, ComparisonRecord&& record) {
            if (record.final.outcome == Outcome::Errored) {
                ++errored;
            }
            writer.append(comparison_record_to_json(record));
            ++flushed;
        },
        stop);

    outcome.records = delivered;
    outcome.errored_verdicts = errored.load();
    outcome.stopped_early = delivered < jobs.size();
    return outcome;
}

std::vector<ComparisonRecord> load_verdicts(const std::filesystem::path& journal_path) {
    std::vector<ComparisonRecord> records;
    std::size_t line_number = 0;
    for (const auto& line : journal::read_all(journal_path)) {
        ++line_number;
        records.push_back(comparison_record_from_json(
            line, journal_path.string() + " record " + std::to_string(line_number)));
    }
    return records;
}

} // namespace pairjudge

#include "pairjudge/config.hpp"

#include "pairjudge/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace pairjudge {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<std::string> RunConfig::model_names() const {
    std::vector<std::string> names;
    names.reserve(models.size());
    for (const auto& model : models) {
        names.push_back(model.name);
    }
    return names;
}

const BackendConfig& RunConfig::model_config(const std::string& name) const {
    for (const auto& model : models) {
        if (model.name == name) {
            return model;
        }
    }
    if (judge.name == name) {
        return judge;
    }
    throw config_error("no backend named '" + name + "' in the run config");
}

std::filesystem::path RunConfig::effective_cache_dir() const {
    return cache_dir.empty() ? output_dir / "cache" : cache_dir;
}

std::vector<std::string> RunConfig::forbidden_prompt_names() const {
    // The names whose presence would de-anonymize a comparison: the
    // evaluated models (by backend name or model id) and the datasets. The
    // judge's own name is deliberately not scanned for — it identifies no
    // compared summary, and words like "judge" appear in rubric prose.
    std::vector<std::string> names;
    for (const auto& model : models) {
        names.push_back(model.name);
        names.push_back(model.model_id);
    }
    for (const auto& dataset : datasets) {
        names.push_back(dataset.name);
    }
    return names;
}

namespace {

void reject_unknown_keys(const json& object, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& item : object.items()) {
        if (!known.count(item.key())) {
            throw config_error(where + ": unknown key '" + item.key() + "'");
        }
    }
}

template <typename T>
T require(const json& object, const char* key, const std::string& where) {
    const auto it = object.find(key);
    if (it == object.end()) {
        throw config_error(where + ": missing required key '" + std::string(key) + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw config_error(where + ": key '" + std::string(key) + "' has the wrong type");
    }
}

BackendConfig parse_backend(const json& object, const std::string& where) {
    // timeout_ms is the snapshot spelling; accepting it keeps a run's
    // config snapshot loadable as a config.
    reject_unknown_keys(object,
                        {"name", "kind", "base_url", "model_id", "api_key_env", "temperature",
                         "max_tokens", "requests_per_minute", "timeout_seconds", "timeout_ms",
                         "retry_limit", "prompt_char_limit", "mock"},
                        where);

    BackendConfig backend;
    backend.name = require<std::string>(object, "name", where);
    backend.kind = object.value("kind", "http");
    backend.model_id = require<std::string>(object, "model_id", where);
    backend.api_key_env = object.value("api_key_env", "");
    backend.temperature = object.value("temperature", 0.0);
    backend.max_tokens = object.value("max_tokens", 512);
    backend.requests_per_minute = object.value("requests_per_minute", 60);
    if (object.contains("timeout_ms")) {
        backend.timeout = std::chrono::milliseconds(object.at("timeout_ms").get<long long>());
    } else {
        backend.timeout = std::chrono::milliseconds(
            static_cast<long long>(object.value("timeout_seconds", 30.0) * 1000.0));
    }
    backend.retry_limit = object.value("retry_limit", 3);
    backend.prompt_char_limit = object.value("prompt_char_limit", std::size_t{0});

    if (backend.kind == "http") {
        backend.base_url = require<std::string>(object, "base_url", where);
    } else if (backend.kind == "mock") {
        if (!object.contains("mock")) {
            throw config_error(where + ": mock backends need a 'mock' behavior object");
        }
        backend.mock_behavior_json = object.at("mock").dump();
    } else {
        throw config_error(where + ": unknown kind '" + backend.kind + "'");
    }

    if (backend.temperature < 0.0) {
        throw config_error(where + ": temperature must be >= 0");
    }
    if (backend.max_tokens <= 0 || backend.requests_per_minute <= 0 ||
        backend.timeout.count() <= 0) {
        throw config_error(where + ": max_tokens, requests_per_minute, and timeout_seconds "
                                   "must be positive");
    }
    if (backend.retry_limit < 0) {
        throw config_error(where + ": retry_limit must be >= 0");
    }
    return backend;
}

DatasetSpec parse_dataset(const json& object, const std::filesystem::path& base_dir,
                          const std::string& where) {
    reject_unknown_keys(object, {"name", "path", "task", "subsample"}, where);
    DatasetSpec spec;
    spec.name = require<std::string>(object, "name", where);
    std::filesystem::path path = require<std::string>(object, "path", where);
    spec.path = path.is_absolute() ? path : base_dir / path;
    spec.task = task_kind_from_string(require<std::string>(object, "task", where));
    if (object.contains("subsample")) {
        const auto& sub = object.at("subsample");
        reject_unknown_keys(sub, {"k", "seed"}, where + ".subsample");
        spec.subsample_k = require<std::size_t>(sub, "k", where + ".subsample");
        if (sub.contains("seed")) {
            spec.subsample_seed = sub.at("seed").get<std::uint64_t>();
        }
    }
    return spec;
}

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides,
                     std::vector<std::string>* warnings) {
    if (overrides.models) {
        std::vector<BackendConfig> kept;
        for (const auto& name : *overrides.models) {
            const auto it = std::find_if(config.models.begin(), config.models.end(),
                                         [&](const BackendConfig& m) { return m.name == name; });
            if (it == config.models.end()) {
                throw config_error("--models: no configured backend named '" + name + "'");
            }
            kept.push_back(*it);
        }
        config.models = std::move(kept);
    }
    if (overrides.target_model) {
        config.target_model = *overrides.target_model;
    }
    if (overrides.judge_model) {
        const auto names = config.model_names();
        if (std::find(names.begin(), names.end(), *overrides.judge_model) == names.end() &&
            config.judge.name != *overrides.judge_model) {
            throw config_error("--judge-model: no configured backend named '" +
                               *overrides.judge_model + "'");
        }
        if (config.judge.name != *overrides.judge_model) {
            config.judge = config.model_config(*overrides.judge_model);
            if (warnings) {
                warnings->push_back("judge model '" + config.judge.name +
                                    "' is also one of the evaluated models");
            }
        }
    }
    if (overrides.seed) {
        config.seed = *overrides.seed;
    }
    if (overrides.parallelism) {
        config.parallelism = *overrides.parallelism;
    }
    if (overrides.cache_dir) {
        config.cache_dir = *overrides.cache_dir;
    }
    if (overrides.output_dir) {
        config.output_dir = *overrides.output_dir;
    }
}

void validate_config(const RunConfig& config, std::vector<std::string>* warnings) {
    if (config.datasets.empty()) {
        throw config_error("config: 'datasets' must list at least one dataset");
    }
    if (config.models.empty()) {
        throw config_error("config: 'models' must list at least one backend");
    }
    if (config.output_dir.empty()) {
        throw config_error("config: missing required key 'output_dir' (or pass --out)");
    }
    if (config.parallelism < 1) {
        throw config_error("config: parallelism must be >= 1");
    }

    std::set<std::string> names;
    for (const auto& model : config.models) {
        if (!names.insert(model.name).second) {
            throw config_error("config: duplicate backend name '" + model.name + "'");
        }
    }
    std::set<std::string> dataset_names;
    for (const auto& dataset : config.datasets) {
        if (!dataset_names.insert(dataset.name).second) {
            throw config_error("config: duplicate dataset name '" + dataset.name + "'");
        }
        if (!std::filesystem::exists(dataset.path)) {
            throw config_error("config: dataset '" + dataset.name + "' path does not exist: " +
                               dataset.path.string());
        }
    }

    if (!names.count(config.target_model)) {
        throw config_error("config: target_model '" + config.target_model +
                           "' is not among the configured models");
    }
    if (names.count(config.judge.name) && warnings) {
        warnings->push_back("judge model '" + config.judge.name +
                            "' is also one of the evaluated models");
    }

    validate_instructions(config.instructions);
    const auto template_violations = validate_judge_template(config.judge_template);
    if (!template_violations.empty()) {
        throw config_error("config: invalid judge_template: " +
                           template_violations.front().to_string());
    }
}

} // namespace

RunConfig parse_config_json(const json& root, const std::filesystem::path& base_dir,
                            const ConfigOverrides& overrides,
                            std::vector<std::string>* warnings) {
    if (!root.is_object()) {
        throw config_error("config: top level must be a JSON object");
    }
    reject_unknown_keys(root,
                        {"datasets", "models", "target_model", "judge", "instructions",
                         "judge_template", "seed", "parallelism", "output_dir", "cache_dir",
                         "cache", "cache_enabled"},
                        "config");

    RunConfig config;

    const auto datasets = require<json>(root, "datasets", "config");
    if (!datasets.is_array()) {
        throw config_error("config: 'datasets' must be an array");
    }
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        config.datasets.push_back(
            parse_dataset(datasets.at(i), base_dir, "config.datasets[" + std::to_string(i) + "]"));
    }

    const auto models = require<json>(root, "models", "config");
    if (!models.is_array()) {
        throw config_error("config: 'models' must be an array");
    }
    for (std::size_t i = 0; i < models.size(); ++i) {
        config.models.push_back(
            parse_backend(models.at(i), "config.models[" + std::to_string(i) + "]"));
    }

    config.target_model = require<std::string>(root, "target_model", "config");
    config.judge = parse_backend(require<json>(root, "judge", "config"), "config.judge");

    config.instructions = default_instructions();
    if (root.contains("instructions")) {
        const auto& inst = root.at("instructions");
        reject_unknown_keys(inst,
                            {"question_summarization", "query_based_summarization",
                             "dialog_summarization", "separator"},
                            "config.instructions");
        if (inst.contains("question_summarization")) {
            config.instructions.question_instruction =
                inst.at("question_summarization").get<std::string>();
        }
        if (inst.contains("query_based_summarization")) {
            config.instructions.query_instruction =
                inst.at("query_based_summarization").get<std::string>();
        }
        if (inst.contains("dialog_summarization")) {
            config.instructions.dialog_instruction =
                inst.at("dialog_summarization").get<std::string>();
        }
        if (inst.contains("separator")) {
            config.instructions.separator = inst.at("separator").get<std::string>();
        }
    }

    config.judge_template = default_judge_template();
    if (root.contains("judge_template")) {
        const auto& tmpl = root.at("judge_template");
        reject_unknown_keys(tmpl, {"rubric", "body", "verdict_protocol", "verdict_tokens"},
                            "config.judge_template");
        if (tmpl.contains("rubric")) {
            config.judge_template.rubric = tmpl.at("rubric").get<std::string>();
        }
        if (tmpl.contains("body")) {
            config.judge_template.body = tmpl.at("body").get<std::string>();
        }
        if (tmpl.contains("verdict_protocol")) {
            config.judge_template.verdict_protocol =
                tmpl.at("verdict_protocol").get<std::string>();
        }
        if (tmpl.contains("verdict_tokens")) {
            // Written into snapshots for the record; the tokens themselves
            // are fixed.
            const json expected = json::array(
                {kVerdictTokenFirst, kVerdictTokenSecond, kVerdictTokenTie});
            if (tmpl.at("verdict_tokens") != expected) {
                throw config_error("config.judge_template: verdict_tokens are fixed to "
                                   "[[A]]/[[B]]/[[C]] and cannot be changed");
            }
        }
    }

    config.seed = root.value("seed", std::uint64_t{0});
    config.parallelism = root.value("parallelism", 4);
    config.output_dir = std::filesystem::path(root.value("output_dir", ""));
    if (!config.output_dir.empty() && config.output_dir.is_relative()) {
        config.output_dir = base_dir / config.output_dir;
    }
    config.cache_dir = std::filesystem::path(root.value("cache_dir", ""));
    if (!config.cache_dir.empty() && config.cache_dir.is_relative()) {
        config.cache_dir = base_dir / config.cache_dir;
    }
    config.cache_enabled = root.value("cache", root.value("cache_enabled", true));

    apply_overrides(config, overrides, warnings);
    validate_config(config, warnings);
    return config;
}

RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides,
                      std::vector<std::string>* warnings) {
    if (path == "demo") {
        RunConfig config = demo_config(overrides.output_dir.value_or("demo_run"));
        apply_overrides(config, overrides, warnings);
        validate_config(config, warnings);
        return config;
    }

    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("cannot open config file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    json root;
    try {
        root = json::parse(buffer.str());
    } catch (const json::exception& ex) {
        throw config_error("config " + path.string() + ": invalid JSON: " + ex.what());
    }
    const auto base_dir =
        path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return parse_config_json(root, base_dir, overrides, warnings);
}

namespace {

ordered_json backend_snapshot(const BackendConfig& backend) {
    ordered_json out;
    out["name"] = backend.name;
    out["kind"] = backend.kind;
    out["model_id"] = backend.model_id;
    if (backend.kind == "http") {
        out["base_url"] = backend.base_url;
    }
    // Env-var name only; the key value itself must never be written out.
    out["api_key_env"] = backend.api_key_env;
    out["temperature"] = backend.temperature;
    out["max_tokens"] = backend.max_tokens;
    out["requests_per_minute"] = backend.requests_per_minute;
    out["timeout_ms"] = backend.timeout.count();
    out["retry_limit"] = backend.retry_limit;
    out["prompt_char_limit"] = backend.prompt_char_limit;
    if (backend.kind == "mock") {
        out["mock"] = json::parse(backend.mock_behavior_json);
    }
    return out;
}

} // namespace

ordered_json config_snapshot(const RunConfig& config) {
    ordered_json out;
    out["seed"] = config.seed;
    out["parallelism"] = config.parallelism;
    out["output_dir"] = config.output_dir.string();
    out["cache_dir"] = config.effective_cache_dir().string();
    out["cache_enabled"] = config.cache_enabled;

    ordered_json datasets = ordered_json::array();
    for (const auto& dataset : config.datasets) {
        ordered_json entry;
        entry["name"] = dataset.name;
        entry["path"] = dataset.path.string();
        entry["task"] = to_string(dataset.task);
        if (dataset.subsample_k) {
            entry["subsample"] = {{"k", *dataset.subsample_k},
                                  {"seed", dataset.subsample_seed.value_or(config.seed)}};
        }
        datasets.push_back(std::move(entry));
    }
    out["datasets"] = std::move(datasets);

    ordered_json models = ordered_json::array();
    for (const auto& model : config.models) {
        models.push_back(backend_snapshot(model));
    }
    out["models"] = std::move(models);
    out["target_model"] = config.target_model;
    out["judge"] = backend_snapshot(config.judge);

    out["instructions"] = {
        {"question_summarization", config.instructions.question_instruction},
        {"query_based_summarization", config.instructions.query_instruction},
        {"dialog_summarization", config.instructions.dialog_instruction},
        {"separator", config.instructions.separator},
    };
    out["judge_template"] = {
        {"rubric", config.judge_template.rubric},
        {"body", config.judge_template.body},
        {"verdict_protocol", config.judge_template.verdict_protocol},
        {"verdict_tokens",
         ordered_json::array({kVerdictTokenFirst, kVerdictTokenSecond, kVerdictTokenTie})},
    };
    return out;
}

namespace {

const char* const kDemoQuestions[] = {
    "I have been taking lisinopril for two months and developed a dry cough "
    "that will not go away. Is this a known side effect and should I stop?",
    "My daughter is 6 and was stung by a wasp; her arm is swollen well past "
    "the sting site. When does a local reaction become an emergency?",
    "Can I take ibuprofen together with my blood pressure medication, or "
    "will it interfere with how the medication works?",
    "I was told my vitamin D level is 18 ng/mL. How much supplementation is "
    "reasonable and for how long before retesting?",
    "After a tick bite three weeks ago I now have joint pain but never saw "
    "a rash. Could this still be Lyme disease?",
    "My father has type 2 diabetes and his fasting sugar is suddenly much "
    "higher since starting prednisone. Is that expected?",
    "Is it safe to get a flu shot while pregnant in the first trimester, "
    "and is the nasal spray version different in that regard?",
    "I keep waking with numb fingers on my right hand, mostly thumb to "
    "middle finger. Does this pattern suggest carpal tunnel syndrome?",
    "How long after finishing a course of isotretinoin do I need to wait "
    "before trying to conceive?",
    "My MRI report says 'mild disc desiccation at L4-L5'. Is that the same "
    "as a herniated disc, and does it explain sciatica?",
    "A blood test showed slightly elevated ALT and AST after I started a "
    "new statin. At what level should the statin be stopped?",
    "My son has had three ear infections this year. At what point are "
    "ear tubes usually considered?",
};

BackendConfig demo_mock(const std::string& name, const std::string& model_id,
                        const std::string& behavior_json) {
    BackendConfig backend;
    backend.name = name;
    backend.kind = "mock";
    backend.model_id = model_id;
    backend.temperature = 0.0;
    backend.max_tokens = 256;
    backend.requests_per_minute = 100000;
    backend.retry_limit = 1;
    backend.mock_behavior_json = behavior_json;
    return backend;
}

} // namespace

RunConfig demo_config(const std::filesystem::path& output_dir) {
    RunConfig config;
    config.seed = 7;
    config.parallelism = 2;
    config.output_dir = output_dir;
    config.cache_enabled = true;

    std::filesystem::create_directories(output_dir);
    const auto dataset_path = output_dir / "demo_questions.jsonl";
    if (!std::filesystem::exists(dataset_path)) {
        SampleSet set;
        set.task = TaskKind::QuestionSummarization;
        int index = 0;
        for (const char* question : kDemoQuestions) {
            Sample sample;
            sample.task = TaskKind::QuestionSummarization;
            sample.id = "q" + std::to_string(++index);
            sample.question = question;
            set.samples.push_back(std::move(sample));
        }
        write_dataset(set, dataset_path);
    }

    DatasetSpec dataset;
    dataset.name = "demo-health-questions";
    dataset.path = dataset_path;
    dataset.task = TaskKind::QuestionSummarization;
    config.datasets.push_back(std::move(dataset));

    config.models = {
        demo_mock("alpha", "demo-alpha-v1", R"({"behavior":"digest_summarizer"})"),
        demo_mock("beta", "demo-beta-v1", R"({"behavior":"digest_summarizer"})"),
        demo_mock("baseline", "demo-baseline-v1", R"({"behavior":"digest_summarizer"})"),
    };
    config.target_model = "baseline";
    config.judge = demo_mock("demo-judge", "demo-judge-v1", R"({"behavior":"content_judge"})");

    config.instructions = default_instructions();
    config.judge_template = default_judge_template();
    return config;
}

} // namespace pairjudge

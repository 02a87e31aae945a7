#include "pairjudge/orchestrator.hpp"
#include "pairjudge/errors.hpp"
#include "pairjudge/journal.hpp"
#include "pairjudge/mock_backend.hpp"

#include "test_util.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <memory>

using namespace pairjudge;

namespace {

// A fully mocked three-model run over a generated question dataset.
struct Fixture {
    testutil::TempDir dir;
    RunConfig config;

    explicit Fixture(std::size_t samples, const std::string& run_name = "run",
                     const std::string& judge_behavior = R"({"behavior":"content_judge"})") {
        const auto dataset_path = dir / "questions.jsonl";
        std::string content;
        for (std::size_t i = 0; i < samples; ++i) {
            nlohmann::json record{
                {"id", "q" + std::to_string(i)},
                {"question", "Is intervention " + std::to_string(i) + " advisable?"}};
            content += record.dump() + "\n";
        }
        testutil::write_file(dataset_path, content);

        DatasetSpec dataset;
        dataset.name = "questions";
        dataset.path = dataset_path;
        dataset.task = TaskKind::QuestionSummarization;
        config.datasets.push_back(dataset);

        config.models = {mock_model("cand-a"), mock_model("cand-b"), mock_model("base")};
        config.target_model = "base";
        config.judge = mock_model("judge");
        config.judge.mock_behavior_json = judge_behavior;
        config.instructions = default_instructions();
        config.judge_template = default_judge_template();
        config.seed = 3;
        config.parallelism = 3;
        config.output_dir = dir / run_name;
        config.cache_enabled = true;
    }

    static BackendConfig mock_model(const std::string& name) {
        BackendConfig model;
        model.name = name;
        model.kind = "mock";
        model.model_id = name + "-v1";
        model.requests_per_minute = 1000000;
        model.retry_limit = 1;
        model.mock_behavior_json = R"({"behavior":"digest_summarizer"})";
        return model;
    }

    RunPaths paths() const { return RunPaths{config.output_dir}; }

    BackendMap build_backends(const StackOptions& options = {}) const {
        BackendMap map;
        for (const auto& model : config.models) {
            map[model.name] = build_backend_stack(model, options);
        }
        return map;
    }

    std::shared_ptr<Backend> build_judge(const StackOptions& options = {}) const {
        return build_backend_stack(config.judge, options);
    }
};

} // namespace

TEST_CASE("generation stores one entry per (sample, model)") {
    Fixture fx(10);
    auto backends = fx.build_backends();
    const auto outcome = run_generation(fx.config, fx.paths(), backends);

    CHECK(outcome.completed == 30); // 10 samples x 3 models
    CHECK(outcome.errored == 0);
    CHECK(outcome.skipped_existing == 0);

    const GenerationStore store = GenerationStore::load(fx.paths().generations());
    CHECK(store.size() == 30);
    const GenerationEntry* entry = store.find("questions", "q0", "cand-a");
    REQUIRE(entry != nullptr);
    CHECK_FALSE(entry->summary.empty());
    CHECK_FALSE(entry->request_digest.empty());
    CHECK_FALSE(entry->errored);
}

TEST_CASE("generation skips existing entries on resume and is a no-op when complete") {
    Fixture fx(6);
    auto backends = fx.build_backends();
    run_generation(fx.config, fx.paths(), backends);

    StageOptions resume;
    resume.resume = true;
    const auto again = run_generation(fx.config, fx.paths(), backends, resume);
    CHECK(again.completed == 0);
    CHECK(again.skipped_existing == 18);

    // Without --resume a populated journal is refused.
    CHECK_THROWS_AS(run_generation(fx.config, fx.paths(), backends), config_error);
}

TEST_CASE("a failing model yields errored entries while others proceed") {
    Fixture fx(5);
    fx.config.models[1].mock_behavior_json = R"({"behavior":"failing","times":1000000})";
    auto backends = fx.build_backends();

    const auto outcome = run_generation(fx.config, fx.paths(), backends);
    CHECK(outcome.completed == 15);
    CHECK(outcome.errored == 5);

    const GenerationStore store = GenerationStore::load(fx.paths().generations());
    const GenerationEntry* bad = store.find("questions", "q2", "cand-b");
    REQUIRE(bad != nullptr);
    CHECK(bad->errored);
    CHECK(bad->error_kind == "transport");
    const GenerationEntry* good = store.find("questions", "q2", "cand-a");
    REQUIRE(good != nullptr);
    CHECK_FALSE(good->errored);
}

TEST_CASE("evaluation produces n-1 records per sample and skips errored generations") {
    Fixture fx(10);
    auto backends = fx.build_backends();
    run_generation(fx.config, fx.paths(), backends);

    auto judge = fx.build_judge();
    const auto outcome = run_evaluation(fx.config, fx.paths(), *judge);
    CHECK(outcome.records == 20); // 10 samples x (3-1) pairs
    CHECK(outcome.skipped_missing == 0);

    const auto records = load_verdicts(fx.paths().verdicts());
    REQUIRE(records.size() == 20);
    for (const auto& record : records) {
        CHECK(record.target_model == "base");
        CHECK((record.candidate_model == "cand-a" || record.candidate_model == "cand-b"));
        CHECK(record.final.outcome != Outcome::Errored);
    }
}

TEST_CASE("records plus skips partition the schedule when a model errors") {
    Fixture fx(8);
    fx.config.models[0].mock_behavior_json = R"({"behavior":"failing","times":1000000})";
    auto backends = fx.build_backends();
    run_generation(fx.config, fx.paths(), backends);

    auto judge = fx.build_judge();
    const auto outcome = run_evaluation(fx.config, fx.paths(), *judge);
    // cand-a errored everywhere: its 8 comparisons are skipped with audit
    // notes; cand-b's 8 proceed.
    CHECK(outcome.records == 8);
    CHECK(outcome.skipped_missing == 8);
    CHECK(outcome.records + outcome.skipped_missing == 8 * (3 - 1));

    const auto audit_lines = journal::read_all(fx.paths().audit());
    std::size_t skip_notes = 0;
    for (const auto& line : audit_lines) {
        if (line.value("kind", "") == "comparison_skipped") {
            ++skip_notes;
            CHECK(line.at("candidate_model") == "cand-a");
            CHECK(line.at("reason").get<std::string>().find("errored generation") !=
                  std::string::npos);
        }
    }
    CHECK(skip_notes == 8);
}

TEST_CASE("stage separation: evaluation needs generation journals, not live backends") {
    Fixture fx(4);
    auto backends = fx.build_backends();
    run_generation(fx.config, fx.paths(), backends);

    // The judge is the only backend available to stage 2.
    auto judge = fx.build_judge();
    const auto outcome = run_evaluation(fx.config, fx.paths(), *judge);
    CHECK(outcome.records == 8);
}

TEST_CASE("running evaluation without generation skips everything with reasons") {
    Fixture fx(3);
    write_snapshot(fx.config, fx.paths());
    auto judge = fx.build_judge();
    const auto outcome = run_evaluation(fx.config, fx.paths(), *judge);
    CHECK(outcome.records == 0);
    CHECK(outcome.skipped_missing == 6);
}

TEST_CASE("resume mid-generation completes to the same journal bytes") {
    Fixture full(10, "uninterrupted");
    {
        auto backends = full.build_backends();
        run_generation(full.config, full.paths(), backends);
    }

    Fixture partial(10, "interrupted");
    // Same inputs, same mocks; only the run directory differs.
    partial.config.datasets = full.config.datasets;
    {
        auto backends = partial.build_backends();
        StageOptions stop_half;
        stop_half.stop = [](std::size_t flushed) { return flushed >= 15; };
        const auto outcome = run_generation(partial.config, partial.paths(), backends, stop_half);
        CHECK(outcome.stopped_early);
        CHECK(outcome.completed < 30);
    }
    {
        auto backends = partial.build_backends();
        StageOptions resume;
        resume.resume = true;
        const auto outcome = run_generation(partial.config, partial.paths(), backends, resume);
        CHECK_FALSE(outcome.stopped_early);
    }

    // Entries carry dataset names and digests, never paths or timestamps,
    // so the resumed journal must match the uninterrupted one byte for byte.
    const std::string a = testutil::read_file(full.paths().generations());
    const std::string b = testutil::read_file(partial.paths().generations());
    CHECK(a == b);
    CHECK_FALSE(a.empty());
}

TEST_CASE("resume under a changed config is refused") {
    Fixture fx(3);
    auto backends = fx.build_backends();
    run_generation(fx.config, fx.paths(), backends);

    RunConfig altered = fx.config;
    altered.seed = 999;
    StageOptions resume;
    resume.resume = true;
    CHECK_THROWS_AS(run_generation(altered, fx.paths(), backends, resume), config_error);
}

TEST_CASE("cached evaluation re-run issues no live judge calls and matches bytes") {
    Fixture fx(6);
    StackOptions cache_options;
    cache_options.cache = std::make_shared<ResponseCache>(fx.dir / "shared_cache");

    auto backends = fx.build_backends(cache_options);
    run_generation(fx.config, fx.paths(), backends);
    auto counting = std::make_shared<CountingBackend>(
        make_mock(fx.config.judge, MockSpec::from_json_text(fx.config.judge.mock_behavior_json)));
    CachedBackend judge1(counting, cache_options.cache);
    run_evaluation(fx.config, fx.paths(), judge1);
    const std::size_t live_calls = counting->calls();
    CHECK(live_calls == 2 * 12); // two orders x (6 samples x 2 candidates)

    // Fresh run dir, same cache.
    RunConfig second = fx.config;
    second.output_dir = fx.dir / "run2";
    const RunPaths paths2{second.output_dir};
    auto backends2 = fx.build_backends(cache_options);
    run_generation(second, paths2, backends2);
    CachedBackend judge2(counting, cache_options.cache);
    run_evaluation(second, paths2, judge2);

    CHECK(counting->calls() == live_calls); // everything came from the cache
    CHECK(testutil::read_file(fx.paths().verdicts()) == testutil::read_file(paths2.verdicts()));
    CHECK(testutil::read_file(fx.paths().generations()) ==
          testutil::read_file(paths2.generations()));
}

TEST_CASE("load_configured_datasets applies the configured subsample") {
    Fixture fx(50);
    fx.config.datasets[0].subsample_k = 10;
    fx.config.datasets[0].subsample_seed = 4;
    const auto sets = load_configured_datasets(fx.config, nullptr);
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].size() == 10);
    CHECK(sets[0].dataset_name == "questions");
}

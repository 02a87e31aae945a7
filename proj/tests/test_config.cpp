#include "pairjudge/config.hpp"
#include "pairjudge/errors.hpp"

#include "test_util.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace pairjudge;
using nlohmann::json;

namespace {

json minimal_config(const testutil::TempDir& dir) {
    testutil::write_file(dir / "data.jsonl",
                         json{{"id", "q1"}, {"question", "Is X ok?"}}.dump() + "\n");
    json root;
    root["datasets"] = json::array({json{{"name", "qs"},
                                         {"path", (dir / "data.jsonl").string()},
                                         {"task", "question_summarization"}}});
    root["models"] = json::array(
        {json{{"name", "m1"}, {"kind", "mock"}, {"model_id", "m1-v1"},
              {"mock", json{{"behavior", "digest_summarizer"}}}},
         json{{"name", "m2"}, {"kind", "mock"}, {"model_id", "m2-v1"},
              {"mock", json{{"behavior", "digest_summarizer"}}}}});
    root["target_model"] = "m2";
    root["judge"] = json{{"name", "arbiter"},
                         {"kind", "mock"},
                         {"model_id", "arbiter-v1"},
                         {"mock", json{{"behavior", "content_judge"}}}};
    root["output_dir"] = (dir / "out").string();
    return root;
}

RunConfig load_from(const testutil::TempDir& dir, const json& root,
                    const ConfigOverrides& overrides = {},
                    std::vector<std::string>* warnings = nullptr) {
    const auto path = dir / "config.json";
    testutil::write_file(path, root.dump(2));
    return load_config(path, overrides, warnings);
}

} // namespace

TEST_CASE("a minimal config materializes every documented default") {
    testutil::TempDir dir;
    const RunConfig config = load_from(dir, minimal_config(dir));

    CHECK(config.seed == 0);
    CHECK(config.parallelism == 4);
    CHECK(config.cache_enabled);
    CHECK(config.effective_cache_dir() == config.output_dir / "cache");
    CHECK(config.instructions.separator == "\n");
    CHECK_FALSE(config.instructions.question_instruction.empty());
    CHECK(validate_judge_template(config.judge_template).empty());
    CHECK(config.judge.temperature == 0.0);
    CHECK(config.judge.name == "arbiter");
    CHECK(config.models.size() == 2);
    CHECK(config.models[0].max_tokens == 512);
    CHECK(config.models[0].retry_limit == 3);
    CHECK(config.models[0].requests_per_minute == 60);

    const auto snapshot = config_snapshot(config);
    CHECK(snapshot.at("instructions").at("separator") == "\n");
    CHECK(snapshot.at("judge").at("temperature") == 0.0);
    const auto tokens = snapshot.at("judge_template").at("verdict_tokens");
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[0] == "[[A]]");
    CHECK(tokens[1] == "[[B]]");
    CHECK(tokens[2] == "[[C]]");
}

TEST_CASE("missing keys are reported by name") {
    testutil::TempDir dir;

    SUBCASE("target_model") {
        json root = minimal_config(dir);
        root.erase("target_model");
        CHECK_THROWS_WITH_AS(load_from(dir, root), doctest::Contains("target_model"),
                             config_error);
    }
    SUBCASE("judge") {
        json root = minimal_config(dir);
        root.erase("judge");
        CHECK_THROWS_WITH_AS(load_from(dir, root), doctest::Contains("judge"), config_error);
    }
    SUBCASE("model name") {
        json root = minimal_config(dir);
        root["models"][0].erase("name");
        CHECK_THROWS_WITH_AS(load_from(dir, root), doctest::Contains("'name'"), config_error);
    }
}

TEST_CASE("semantic validation errors") {
    testutil::TempDir dir;

    SUBCASE("target not among models") {
        json root = minimal_config(dir);
        root["target_model"] = "nope";
        CHECK_THROWS_WITH_AS(load_from(dir, root), doctest::Contains("target_model"),
                             config_error);
    }
    SUBCASE("duplicate backend names") {
        json root = minimal_config(dir);
        root["models"][1]["name"] = "m1";
        root["target_model"] = "m1";
        CHECK_THROWS_WITH_AS(load_from(dir, root), doctest::Contains("duplicate"), config_error);
    }
    SUBCASE("dangling dataset path") {
        json root = minimal_config(dir);
        root["datasets"][0]["path"] = (dir / "missing.jsonl").string();
        CHECK_THROWS_WITH_AS(load_from(dir, root), doctest::Contains("does not exist"),
                             config_error);
    }
    SUBCASE("unknown top-level key") {
        json root = minimal_config(dir);
        root["surprise"] = 1;
        CHECK_THROWS_WITH_AS(load_from(dir, root), doctest::Contains("surprise"), config_error);
    }
    SUBCASE("http backend requires base_url") {
        json root = minimal_config(dir);
        root["models"][0] = json{{"name", "m1"}, {"model_id", "x"}};
        CHECK_THROWS_WITH_AS(load_from(dir, root), doctest::Contains("base_url"), config_error);
    }
    SUBCASE("broken judge template") {
        json root = minimal_config(dir);
        root["judge_template"] = json{{"rubric", "judge nicely"}};
        CHECK_THROWS_WITH_AS(load_from(dir, root), doctest::Contains("judge_template"),
                             config_error);
    }
}

TEST_CASE("a judge that also competes is allowed but warned about") {
    testutil::TempDir dir;
    json root = minimal_config(dir);
    root["judge"]["name"] = "m1";
    std::vector<std::string> warnings;
    const RunConfig config = load_from(dir, root, {}, &warnings);
    CHECK(config.judge.name == "m1");
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("also one of the evaluated models") != std::string::npos);
}

TEST_CASE("flag overrides win over file values") {
    testutil::TempDir dir;
    json root = minimal_config(dir);
    root["seed"] = 11;
    root["parallelism"] = 2;

    ConfigOverrides overrides;
    overrides.seed = 99;
    overrides.parallelism = 8;
    overrides.output_dir = dir / "elsewhere";
    overrides.target_model = "m1";
    const RunConfig config = load_from(dir, root, overrides);
    CHECK(config.seed == 99);
    CHECK(config.parallelism == 8);
    CHECK(config.output_dir == dir / "elsewhere");
    CHECK(config.target_model == "m1");
}

TEST_CASE("--models restricts the evaluated set and still requires the target") {
    testutil::TempDir dir;
    const json root = minimal_config(dir);

    ConfigOverrides overrides;
    overrides.models = std::vector<std::string>{"m2"};
    const RunConfig config = load_from(dir, root, overrides);
    CHECK(config.models.size() == 1);

    ConfigOverrides bad;
    bad.models = std::vector<std::string>{"m1"}; // drops the target
    CHECK_THROWS_AS(load_from(dir, root, bad), config_error);
}

TEST_CASE("--judge-model promotes a configured model to judge with a warning") {
    testutil::TempDir dir;
    ConfigOverrides overrides;
    overrides.judge_model = "m1";
    std::vector<std::string> warnings;
    const RunConfig config = load_from(dir, minimal_config(dir), overrides, &warnings);
    CHECK(config.judge.name == "m1");
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("snapshots carry env-var names but never secret values") {
    testutil::TempDir dir;
    json root = minimal_config(dir);
    root["models"][0] = json{{"name", "m1"},
                             {"kind", "http"},
                             {"base_url", "http://localhost:1"},
                             {"model_id", "m1-v1"},
                             {"api_key_env", "PAIRJUDGE_SECRET_TEST"}};
    setenv("PAIRJUDGE_SECRET_TEST", "super-secret-value", 1);
    const RunConfig config = load_from(dir, root);
    const std::string snapshot = config_snapshot(config).dump();
    CHECK(snapshot.find("PAIRJUDGE_SECRET_TEST") != std::string::npos);
    CHECK(snapshot.find("super-secret-value") == std::string::npos);
    unsetenv("PAIRJUDGE_SECRET_TEST");
}

TEST_CASE("relative paths resolve against the config file directory") {
    testutil::TempDir dir;
    json root = minimal_config(dir);
    root["datasets"][0]["path"] = "data.jsonl";
    root["output_dir"] = "out";
    const RunConfig config = load_from(dir, root);
    CHECK(config.datasets[0].path == dir / "data.jsonl");
    CHECK(config.output_dir == dir / "out");
}

TEST_CASE("a run snapshot loads back to an equivalent config") {
    testutil::TempDir dir;
    json root = minimal_config(dir);
    root["seed"] = 17;
    root["parallelism"] = 6;
    root["models"][0]["temperature"] = 0.4;
    const RunConfig config = load_from(dir, root);

    const auto snapshot_path = dir / "snapshot.json";
    testutil::write_file(snapshot_path, config_snapshot(config).dump(2));
    const RunConfig reloaded = load_config(snapshot_path);

    // Fixed point: snapshotting the reloaded config changes nothing.
    CHECK(config_snapshot(reloaded) == config_snapshot(config));
    CHECK(reloaded.seed == 17);
    CHECK(reloaded.models[0].temperature == 0.4);
    CHECK(reloaded.models[0].timeout == config.models[0].timeout);
}

TEST_CASE("the demo profile is a complete offline run config") {
    testutil::TempDir dir;
    ConfigOverrides overrides;
    overrides.output_dir = dir / "demo";
    std::vector<std::string> warnings;
    const RunConfig config = load_config("demo", overrides, &warnings);

    CHECK(config.models.size() == 3);
    CHECK(config.target_model == "baseline");
    CHECK(config.judge.kind == "mock");
    REQUIRE(config.datasets.size() == 1);
    CHECK(std::filesystem::exists(config.datasets[0].path));
    CHECK(config.datasets[0].task == TaskKind::QuestionSummarization);
    for (const auto& model : config.models) {
        CHECK(model.kind == "mock");
    }
}

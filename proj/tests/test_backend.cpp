#include "pairjudge/backend.hpp"
#include "pairjudge/backend_stack.hpp"
#include "pairjudge/cache.hpp"
#include "pairjudge/clock.hpp"
#include "pairjudge/errors.hpp"
#include "pairjudge/http_backend.hpp"
#include "pairjudge/mock_backend.hpp"
#include "pairjudge/rate_limiter.hpp"

#include "test_util.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <memory>
#include <thread>

using namespace pairjudge;
using nlohmann::json;

namespace {

BackendConfig mock_config(const std::string& name = "mock-backend") {
    BackendConfig config;
    config.name = name;
    config.kind = "mock";
    config.model_id = name + "-v1";
    config.requests_per_minute = 100000;
    return config;
}

CompletionRequest simple_request(const std::string& content, double temperature = 0.0) {
    CompletionRequest request;
    request.backend_name = "mock-backend";
    request.messages = {{Role::User, content}};
    request.temperature = temperature;
    request.max_tokens = 128;
    return request;
}

std::string judge_style_prompt(const std::string& answer_1, const std::string& answer_2) {
    return "[Input]\nsome question\n\n[The Start of Assistant A's Answer]\n" + answer_1 +
           "\n[The End of Assistant A's Answer]\n\n[The Start of Assistant B's Answer]\n" +
           answer_2 + "\n[The End of Assistant B's Answer]";
}

} // namespace

TEST_CASE("cache_key is stable for equal requests and sensitive to every field") {
    const auto request = simple_request("hello");
    const std::string digest = cache_key("model-x", request);
    CHECK(digest == cache_key("model-x", simple_request("hello")));
    CHECK(digest.size() == 64);

    SUBCASE("temperature changes the digest") {
        CHECK(cache_key("model-x", simple_request("hello", 0.7)) != digest);
    }
    SUBCASE("max_tokens changes the digest") {
        auto other = simple_request("hello");
        other.max_tokens = 64;
        CHECK(cache_key("model-x", other) != digest);
    }
    SUBCASE("model id changes the digest") {
        CHECK(cache_key("model-y", request) != digest);
    }
    SUBCASE("message order is semantic") {
        CompletionRequest two;
        two.messages = {{Role::System, "s"}, {Role::User, "u"}};
        CompletionRequest swapped;
        swapped.messages = {{Role::User, "u"}, {Role::System, "s"}};
        CHECK(cache_key("m", two) != cache_key("m", swapped));
    }
    SUBCASE("content bytes are untouched by canonicalization") {
        const std::string canonical = canonical_request_json("m", simple_request("a  b\t c\n"));
        CHECK(canonical.find("a  b\\t c\\n") != std::string::npos);
    }
}

TEST_CASE("constant and scripted mocks obey the completion contract") {
    const auto config = mock_config();

    MockSpec constant;
    constant.behavior = MockSpec::Behavior::Constant;
    constant.constant_text = "SUMMARY-1";
    auto backend = make_mock(config, constant);

    const CompletionResult result = backend->complete(simple_request("anything"));
    CHECK(result.text == "SUMMARY-1");
    CHECK_FALSE(result.from_cache);
    CHECK(result.backend_name == config.name);
    CHECK(result.request_digest == cache_key(config.model_id, simple_request("anything")));

    MockSpec scripted;
    scripted.behavior = MockSpec::Behavior::Scripted;
    scripted.script = {{ScriptEntry::Match::Contains, "alpha", "reply A"},
                       {ScriptEntry::Match::Digest,
                        cache_key(config.model_id, simple_request("exact")), "reply B"}};
    auto scripted_backend = make_mock(config, scripted);
    CHECK(scripted_backend->complete(simple_request("has alpha inside")).text == "reply A");
    CHECK(scripted_backend->complete(simple_request("exact")).text == "reply B");
    CHECK_THROWS_AS(scripted_backend->complete(simple_request("unknown")),
                    unscripted_request_error);
}

TEST_CASE("position-biased judge mock always prefers the first slot") {
    auto backend = make_mock(mock_config("biased-judge"), [] {
        MockSpec spec;
        spec.behavior = MockSpec::Behavior::PositionBiasedJudge;
        return spec;
    }());
    const auto reply = backend->complete(simple_request(judge_style_prompt("one", "two"))).text;
    CHECK(reply.find("[[A]]") != std::string::npos);
}

TEST_CASE("lookup judge mock replays its table and rejects unknown pairs") {
    MockSpec spec;
    spec.behavior = MockSpec::Behavior::LookupJudge;
    spec.lookup = {{"llama summary", "gpt summary", "[[A]]"},
                   {"gpt summary", "llama summary", "[[B]]"}};
    auto backend = make_mock(mock_config("lookup-judge"), spec);

    CHECK(backend->complete(simple_request(judge_style_prompt("llama summary", "gpt summary")))
              .text.find("[[A]]") != std::string::npos);
    CHECK(backend->complete(simple_request(judge_style_prompt("gpt summary", "llama summary")))
              .text.find("[[B]]") != std::string::npos);
    CHECK_THROWS_AS(
        backend->complete(simple_request(judge_style_prompt("unknown", "pair"))),
        unscripted_request_error);
    CHECK_THROWS_AS(backend->complete(simple_request("no markers at all")),
                    unscripted_request_error);
}

TEST_CASE("content judge mock prefers by content score, not position") {
    MockSpec spec;
    spec.behavior = MockSpec::Behavior::ContentJudge;
    auto backend = make_mock(mock_config("content-judge"), spec);

    const std::string strong = "strong summary";
    const std::string weak = "weak summary";
    const bool strong_wins = content_score(strong) > content_score(weak);

    const auto forward =
        backend->complete(simple_request(judge_style_prompt(strong, weak))).text;
    const auto reverse =
        backend->complete(simple_request(judge_style_prompt(weak, strong))).text;
    if (strong_wins) {
        CHECK(forward.find("[[A]]") != std::string::npos);
        CHECK(reverse.find("[[B]]") != std::string::npos);
    } else {
        CHECK(forward.find("[[B]]") != std::string::npos);
        CHECK(reverse.find("[[A]]") != std::string::npos);
    }

    const auto tie = backend->complete(simple_request(judge_style_prompt(strong, strong))).text;
    CHECK(tie.find("[[C]]") != std::string::npos);
}

TEST_CASE("retry layer retries transport failures and records the count") {
    VirtualClock clock;
    const auto config = mock_config("flaky");

    MockSpec spec;
    spec.behavior = MockSpec::Behavior::Failing;
    spec.fail_times = 2;
    spec.inner = std::make_unique<MockSpec>();
    spec.inner->behavior = MockSpec::Behavior::Constant;
    spec.inner->constant_text = "finally";

    auto flaky = make_mock(config, spec);
    RetryingBackend retrying(flaky, 3, std::chrono::milliseconds(10), clock);

    const CompletionResult result = retrying.complete(simple_request("x"));
    CHECK(result.text == "finally");
    CHECK(result.retries == 2);
    // Exponential backoff: 10ms then 20ms on the virtual clock.
    CHECK(clock.now().time_since_epoch() == std::chrono::milliseconds(30));
}

TEST_CASE("retry layer gives up after the limit and propagates the error") {
    VirtualClock clock;
    MockSpec spec;
    spec.behavior = MockSpec::Behavior::Failing;
    spec.fail_times = 10;
    auto flaky = make_mock(mock_config("hopeless"), spec);
    RetryingBackend retrying(flaky, 3, std::chrono::milliseconds(1), clock);
    CHECK_THROWS_AS(retrying.complete(simple_request("x")), transport_error);
}

TEST_CASE("protocol errors are not retried") {
    VirtualClock clock;

    class ProtocolFailBackend final : public Backend {
    public:
        explicit ProtocolFailBackend(BackendConfig config) : config_(std::move(config)) {}
        CompletionResult complete(const CompletionRequest&) override {
            ++calls;
            throw protocol_error(400, "bad request");
        }
        const BackendConfig& config() const override { return config_; }
        int calls = 0;

    private:
        BackendConfig config_;
    };

    auto backend = std::make_shared<ProtocolFailBackend>(mock_config("proto"));
    RetryingBackend retrying(backend, 5, std::chrono::milliseconds(1), clock);
    CHECK_THROWS_AS(retrying.complete(simple_request("x")), protocol_error);
    CHECK(backend->calls == 1);
}

TEST_CASE("cache layer serves repeats without touching the inner backend") {
    testutil::TempDir dir;
    const auto config = mock_config();

    MockSpec spec;
    spec.behavior = MockSpec::Behavior::Constant;
    spec.constant_text = "cached text";
    auto counting = std::make_shared<CountingBackend>(make_mock(config, spec));
    CachedBackend cached(counting, std::make_shared<ResponseCache>(dir.path()));

    const auto first = cached.complete(simple_request("q"));
    CHECK_FALSE(first.from_cache);
    CHECK(counting->calls() == 1);

    const auto second = cached.complete(simple_request("q"));
    CHECK(second.from_cache);
    CHECK(second.text == first.text);
    CHECK(second.request_digest == first.request_digest);
    CHECK(counting->calls() == 1);

    // A fresh cache object over the same directory still hits.
    CachedBackend resumed(counting, std::make_shared<ResponseCache>(dir.path()));
    CHECK(resumed.complete(simple_request("q")).from_cache);
    CHECK(counting->calls() == 1);
}

TEST_CASE("rate limiter admits at most the configured calls per 60s window") {
    VirtualClock clock;
    RateLimiter limiter(5, clock);

    std::vector<std::chrono::milliseconds> admissions;
    for (int i = 0; i < 23; ++i) {
        limiter.acquire();
        admissions.push_back(std::chrono::duration_cast<std::chrono::milliseconds>(
            clock.now().time_since_epoch()));
    }

    // Sliding window property over the virtual timeline.
    for (std::size_t i = 0; i < admissions.size(); ++i) {
        std::size_t in_window = 0;
        for (std::size_t j = 0; j <= i; ++j) {
            if (admissions[i] - admissions[j] < std::chrono::milliseconds(60000)) {
                ++in_window;
            }
        }
        CHECK(in_window <= 5);
    }
    // The 6th call had to wait out the first window.
    CHECK(admissions[5] >= std::chrono::milliseconds(60000));
}

TEST_CASE("rate limiter is callable from many threads") {
    SystemClock clock;
    RateLimiter limiter(10000, clock);
    std::atomic<int> done{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 50; ++i) {
                limiter.acquire();
                ++done;
            }
        });
    }
    for (auto& thread : threads) {
        thread.join();
    }
    CHECK(done.load() == 400);
}

namespace {

struct TestServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    explicit TestServer(const httplib::Server::Handler& handler) {
        server.Post("/v1/chat/completions", handler);
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~TestServer() {
        server.stop();
        thread.join();
    }

    BackendConfig config(const std::string& name = "live") const {
        BackendConfig c;
        c.name = name;
        c.kind = "http";
        c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
        c.model_id = "test-model";
        c.timeout = std::chrono::milliseconds(2000);
        c.requests_per_minute = 100000;
        return c;
    }
};

std::string completion_body(const std::string& text) {
    json body;
    body["choices"] = json::array({json{{"message", json{{"content", text}}}}});
    return body.dump();
}

} // namespace

TEST_CASE("http backend round-trips the chat-completion protocol") {
    std::string seen_body;
    std::string seen_auth;
    TestServer server([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = req.body;
        seen_auth = req.get_header_value("Authorization");
        res.set_content(completion_body("live summary"), "application/json");
    });

    setenv("PAIRJUDGE_TEST_KEY", "sekret-token", 1);
    auto config = server.config();
    config.api_key_env = "PAIRJUDGE_TEST_KEY";
    HttpBackend backend(config);

    CompletionRequest request;
    request.backend_name = "live";
    request.messages = {{Role::System, "be brief"}, {Role::User, "summarize this"}};
    request.temperature = 0.25;
    request.max_tokens = 77;

    const CompletionResult result = backend.complete(request);
    CHECK(result.text == "live summary");
    CHECK_FALSE(result.from_cache);
    CHECK(result.request_digest == cache_key("test-model", request));

    const json body = json::parse(seen_body);
    CHECK(body.at("model") == "test-model");
    CHECK(body.at("temperature") == 0.25);
    CHECK(body.at("max_tokens") == 77);
    REQUIRE(body.at("messages").size() == 2);
    CHECK(body.at("messages")[0].at("role") == "system");
    CHECK(body.at("messages")[1].at("content") == "summarize this");
    CHECK(seen_auth == "Bearer sekret-token");
    unsetenv("PAIRJUDGE_TEST_KEY");
}

TEST_CASE("http backend maps status codes to distinguishable errors") {
    std::atomic<int> hits{0};
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
        const int n = ++hits;
        if (n <= 2) {
            res.status = 500;
            res.set_content("boom", "text/plain");
        } else {
            res.set_content(completion_body("after retries"), "application/json");
        }
    });

    SUBCASE("5xx surfaces as transport_error") {
        HttpBackend backend(server.config());
        CHECK_THROWS_AS(backend.complete(simple_request("x")), transport_error);
    }

    SUBCASE("the retry stack heals transient 5xx") {
        VirtualClock clock;
        auto backend = std::make_shared<HttpBackend>(server.config());
        RetryingBackend retrying(backend, 3, std::chrono::milliseconds(1), clock);
        const auto result = retrying.complete(simple_request("x"));
        CHECK(result.text == "after retries");
        CHECK(result.retries == 2);
    }
}

TEST_CASE("http backend reports protocol errors with status and excerpt") {
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
        res.status = 404;
        res.set_content("{\"error\": {\"message\": \"no such model\"}}", "application/json");
    });
    HttpBackend backend(server.config());
    try {
        backend.complete(simple_request("x"));
        FAIL("expected protocol_error");
    } catch (const protocol_error& ex) {
        CHECK(ex.status() == 404);
        CHECK(std::string(ex.what()).find("no such model") != std::string::npos);
    }
}

TEST_CASE("http backend rejects malformed completion payloads") {
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"choices\": []}", "application/json");
    });
    HttpBackend backend(server.config());
    CHECK_THROWS_AS(backend.complete(simple_request("x")), protocol_error);
}

TEST_CASE("http backend times out against a stalled server") {
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        res.set_content(completion_body("too late"), "application/json");
    });
    auto config = server.config();
    config.timeout = std::chrono::milliseconds(150);
    HttpBackend backend(config);
    CHECK_THROWS_AS(backend.complete(simple_request("x")), timeout_error);
}

TEST_CASE("connection refused is a transport error") {
    BackendConfig config;
    config.name = "nobody";
    config.kind = "http";
    config.base_url = "http://127.0.0.1:9"; // discard port, nothing listens
    config.model_id = "m";
    config.timeout = std::chrono::milliseconds(300);
    HttpBackend backend(config);
    CHECK_THROWS_AS(backend.complete(simple_request("x")), transport_error);
}

TEST_CASE("the full stack composes cache, retry, rate limit, and transport") {
    testutil::TempDir dir;
    VirtualClock clock;

    auto config = mock_config("stacked");
    config.mock_behavior_json = R"({"behavior":"digest_summarizer"})";
    config.retry_limit = 2;

    StackOptions options;
    options.cache = std::make_shared<ResponseCache>(dir.path());
    options.clock = &clock;
    auto backend = build_backend_stack(config, options);

    const auto first = backend->complete(simple_request("same input"));
    const auto second = backend->complete(simple_request("same input"));
    CHECK_FALSE(first.from_cache);
    CHECK(second.from_cache);
    CHECK(first.text == second.text);
    CHECK(backend->config().name == "stacked");
}

#include "pairjudge/mock_backend.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <utility>

namespace pairjudge {

using nlohmann::json;

namespace {

constexpr const char* kAnswer1Start = "[The Start of Assistant A's Answer]\n";
constexpr const char* kAnswer1End = "\n[The End of Assistant A's Answer]";
constexpr const char* kAnswer2Start = "[The Start of Assistant B's Answer]\n";
constexpr const char* kAnswer2End = "\n[The End of Assistant B's Answer]";

std::string last_user_content(const CompletionRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == Role::User) {
            return it->content;
        }
    }
    return {};
}

// Shared plumbing: every mock produces its reply from the request and the
// request digest, so results carry the same metadata a live backend would.
class MockBackend : public Backend {
public:
    explicit MockBackend(BackendConfig config) : config_(std::move(config)) {}

    CompletionResult complete(const CompletionRequest& request) final {
        validate_request(request);
        const std::string digest = cache_key(config_.model_id, request);
        CompletionResult result;
        result.text = reply(request, digest);
        result.request_digest = digest;
        result.backend_name = config_.name;
        result.from_cache = false;
        return result;
    }

    const BackendConfig& config() const final { return config_; }

protected:
    virtual std::string reply(const CompletionRequest& request, const std::string& digest) = 0;

private:
    BackendConfig config_;
};

class ConstantBackend final : public MockBackend {
public:
    ConstantBackend(BackendConfig config, std::string text)
        : MockBackend(std::move(config)), text_(std::move(text)) {}

protected:
    std::string reply(const CompletionRequest&, const std::string&) override { return text_; }

private:
    std::string text_;
};

class ScriptedBackend final : public MockBackend {
public:
    ScriptedBackend(BackendConfig config, std::vector<ScriptEntry> script)
        : MockBackend(std::move(config)), script_(std::move(script)) {}

protected:
    std::string reply(const CompletionRequest& request, const std::string& digest) override {
        const std::string content = last_user_content(request);
        for (const auto& entry : script_) {
            if (entry.match == ScriptEntry::Match::Digest && entry.key == digest) {
                return entry.reply;
            }
            if (entry.match == ScriptEntry::Match::Contains &&
                content.find(entry.key) != std::string::npos) {
                return entry.reply;
            }
        }
        throw unscripted_request_error("unscripted request to mock '" + config().name +
                                       "' (digest " + digest + ")");
    }

private:
    std::vector<ScriptEntry> script_;
};

class PositionBiasedJudgeBackend final : public MockBackend {
public:
    using MockBackend::MockBackend;

protected:
    std::string reply(const CompletionRequest&, const std::string&) override {
        return "The first response is clearly preferable. [[A]]";
    }
};

class LookupJudgeBackend final : public MockBackend {
public:
    LookupJudgeBackend(BackendConfig config, std::vector<MockSpec::LookupEntry> table)
        : MockBackend(std::move(config)), table_(std::move(table)) {}

protected:
    std::string reply(const CompletionRequest& request, const std::string& digest) override {
        const auto answers = extract_judge_answers(last_user_content(request));
        if (!answers) {
            throw unscripted_request_error("lookup judge '" + config().name +
                                           "' got a prompt without answer markers");
        }
        for (const auto& entry : table_) {
            if (entry.answer_1 == answers->answer_1 && entry.answer_2 == answers->answer_2) {
                return "Verdict per table. " + entry.verdict_token;
            }
        }
        throw unscripted_request_error("unscripted answer pair for lookup judge '" +
                                       config().name + "' (digest " + digest + ")");
    }

private:
    std::vector<MockSpec::LookupEntry> table_;
};

class ContentJudgeBackend final : public MockBackend {
public:
    using MockBackend::MockBackend;

protected:
    std::string reply(const CompletionRequest& request, const std::string&) override {
        const auto answers = extract_judge_answers(last_user_content(request));
        if (!answers) {
            throw unscripted_request_error("content judge '" + config().name +
                                           "' got a prompt without answer markers");
        }
        const auto score_1 = content_score(answers->answer_1);
        const auto score_2 = content_score(answers->answer_2);
        const char* token = score_1 == score_2 ? "[[C]]" : (score_1 > score_2 ? "[[A]]" : "[[B]]");
        return std::string("Compared on coherence, consistency, fluency, and relevance. ") + token;
    }
};

class FlakyBackend final : public Backend {
public:
    FlakyBackend(std::shared_ptr<Backend> inner, int fail_times)
        : inner_(std::move(inner)), remaining_(fail_times) {}

    CompletionResult complete(const CompletionRequest& request) override {
        if (remaining_.fetch_sub(1) > 0) {
            throw transport_error("injected transport failure from mock '" +
                                  inner_->config().name + "'");
        }
        return inner_->complete(request);
    }

    const BackendConfig& config() const override { return inner_->config(); }

private:
    std::shared_ptr<Backend> inner_;
    std::atomic<int> remaining_;
};

class DigestSummarizerBackend final : public MockBackend {
public:
    using MockBackend::MockBackend;

protected:
    std::string reply(const CompletionRequest&, const std::string& digest) override {
        // Distinct per (model, prompt), stable across runs, and free of any
        // model identity so judge prompts built from it stay anonymous.
        return "A concise summary of the input, variant " + digest.substr(0, 12) + ".";
    }
};

} // namespace

std::optional<ExtractedAnswers> extract_judge_answers(const std::string& prompt) {
    const std::size_t a_start = prompt.find(kAnswer1Start);
    if (a_start == std::string::npos) {
        return std::nullopt;
    }
    const std::size_t a_text = a_start + std::strlen(kAnswer1Start);
    const std::size_t a_end = prompt.find(kAnswer1End, a_text);
    if (a_end == std::string::npos) {
        return std::nullopt;
    }
    const std::size_t b_start = prompt.find(kAnswer2Start, a_end);
    if (b_start == std::string::npos) {
        return std::nullopt;
    }
    const std::size_t b_text = b_start + std::strlen(kAnswer2Start);
    const std::size_t b_end = prompt.find(kAnswer2End, b_text);
    if (b_end == std::string::npos) {
        return std::nullopt;
    }
    return ExtractedAnswers{prompt.substr(a_text, a_end - a_text),
                            prompt.substr(b_text, b_end - b_text)};
}

std::uint64_t content_score(const std::string& text) {
    // FNV-1a, 64-bit.
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (const unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

MockSpec MockSpec::from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& ex) {
        throw config_error(std::string("invalid mock spec: ") + ex.what());
    }

    MockSpec spec;
    const std::string behavior = root.value("behavior", "");
    if (behavior == "constant") {
        spec.behavior = Behavior::Constant;
        spec.constant_text = root.value("text", "ok");
    } else if (behavior == "scripted") {
        spec.behavior = Behavior::Scripted;
        for (const auto& entry : root.value("script", json::array())) {
            ScriptEntry parsed;
            parsed.match = entry.value("match", "contains") == "digest"
                               ? ScriptEntry::Match::Digest
                               : ScriptEntry::Match::Contains;
            parsed.key = entry.value("key", "");
            parsed.reply = entry.value("reply", "");
            spec.script.push_back(std::move(parsed));
        }
    } else if (behavior == "position_biased_judge") {
        spec.behavior = Behavior::PositionBiasedJudge;
    } else if (behavior == "lookup_judge") {
        spec.behavior = Behavior::LookupJudge;
        for (const auto& entry : root.value("table", json::array())) {
            spec.lookup.push_back({entry.value("answer_1", ""), entry.value("answer_2", ""),
                                   entry.value("verdict", "[[C]]")});
        }
    } else if (behavior == "content_judge") {
        spec.behavior = Behavior::ContentJudge;
    } else if (behavior == "failing") {
        spec.behavior = Behavior::Failing;
        spec.fail_times = root.value("times", 1);
        if (root.contains("inner")) {
            spec.inner = std::make_unique<MockSpec>(from_json_text(root.at("inner").dump()));
        }
    } else if (behavior == "digest_summarizer") {
        spec.behavior = Behavior::DigestSummarizer;
    } else {
        throw config_error("unknown mock behavior '" + behavior + "'");
    }
    return spec;
}

std::shared_ptr<Backend> make_mock(const BackendConfig& config, const MockSpec& spec) {
    switch (spec.behavior) {
    case MockSpec::Behavior::Constant:
        return std::make_shared<ConstantBackend>(config, spec.constant_text);
    case MockSpec::Behavior::Scripted:
        return std::make_shared<ScriptedBackend>(config, spec.script);
    case MockSpec::Behavior::PositionBiasedJudge:
        return std::make_shared<PositionBiasedJudgeBackend>(config);
    case MockSpec::Behavior::LookupJudge:
        return std::make_shared<LookupJudgeBackend>(config, spec.lookup);
    case MockSpec::Behavior::ContentJudge:
        return std::make_shared<ContentJudgeBackend>(config);
    case MockSpec::Behavior::Failing: {
        std::shared_ptr<Backend> inner;
        if (spec.inner) {
            inner = make_mock(config, *spec.inner);
        } else {
            inner = std::make_shared<ConstantBackend>(config, "ok");
        }
        return std::make_shared<FlakyBackend>(std::move(inner), spec.fail_times);
    }
    case MockSpec::Behavior::DigestSummarizer:
        return std::make_shared<DigestSummarizerBackend>(config);
    }
    throw config_error("unhandled mock behavior");
}

} // namespace pairjudge

#pragma once

#include "pairjudge/backend.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pairjudge {

// Deterministic in-process backends for tests and the offline demo profile.
// They satisfy the full Backend contract without network access and are
// indistinguishable from live backends to every caller.

struct ScriptEntry {
    enum class Match { Digest, Contains };
    Match match = Match::Contains;
    std::string key;   // request digest, or substring of the last user message
    std::string reply;
};

struct MockSpec {
    enum class Behavior {
        Constant,           // same reply for every request
        Scripted,           // first matching ScriptEntry wins; no match is an error
        PositionBiasedJudge, // always prefers the first-position answer
        LookupJudge,        // verdict looked up by the (answer_1, answer_2) pair
        ContentJudge,       // prefers whichever answer has the higher content score
        Failing,            // throws transport errors N times, then delegates
        DigestSummarizer,   // short deterministic summary derived from the request
    };

    Behavior behavior = Behavior::Constant;
    std::string constant_text;
    std::vector<ScriptEntry> script;
    // LookupJudge table: verdict token keyed by the answers in presentation order.
    struct LookupEntry {
        std::string answer_1;
        std::string answer_2;
        std::string verdict_token;
    };
    std::vector<LookupEntry> lookup;
    int fail_times = 0;
    std::unique_ptr<MockSpec> inner; // what Failing delegates to once healed

    static MockSpec from_json_text(const std::string& text);
};

std::shared_ptr<Backend> make_mock(const BackendConfig& config, const MockSpec& spec);

// The judge mocks locate the two answers between the "[The Start of
// Assistant X's Answer]" / "[The End of Assistant X's Answer]" markers of
// the default judge template; they throw unscripted_request_error when a
// prompt lacks the markers.
struct ExtractedAnswers {
    std::string answer_1;
    std::string answer_2;
};
std::optional<ExtractedAnswers> extract_judge_answers(const std::string& prompt);

// Content score used by the ContentJudge mock: FNV-1a 64-bit over the
// answer bytes. Exposed so tests can predict its preferences.
std::uint64_t content_score(const std::string& text);

// Test helper: counts how many completions actually reach the wrapped
// backend (i.e. were not served from a cache layered above).
class CountingBackend final : public Backend {
public:
    explicit CountingBackend(std::shared_ptr<Backend> inner)
        : inner_(std::move(inner)) {}

    CompletionResult complete(const CompletionRequest& request) override {
        ++calls_;
        return inner_->complete(request);
    }
    const BackendConfig& config() const override { return inner_->config(); }

    std::size_t calls() const { return calls_.load(); }

private:
    std::shared_ptr<Backend> inner_;
    std::atomic<std::size_t> calls_{0};
};

} // namespace pairjudge

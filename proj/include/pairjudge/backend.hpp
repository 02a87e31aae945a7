#pragma once

#include "pairjudge/errors.hpp"

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace pairjudge {

enum class Role { System, User };

std::string to_string(Role role);
Role role_from_string(const std::string& name);

struct Message {
    Role role = Role::User;
    std::string content;

    bool operator==(const Message&) const = default;
};

// How a backend is reached. `kind` is "http" for the wire protocol or
// "mock" for a deterministic in-process backend (see mock_backend.hpp).
struct BackendConfig {
    std::string name;
    std::string kind = "http";
    std::string base_url;
    std::string model_id;
    std::string api_key_env;
    double temperature = 0.0;
    int max_tokens = 512;
    int requests_per_minute = 60;
    std::chrono::milliseconds timeout{30000};
    int retry_limit = 3;
    // Character budget for rendered prompts; 0 = unlimited.
    std::size_t prompt_char_limit = 0;
    // Serialized mock behavior, only meaningful when kind == "mock".
    std::string mock_behavior_json;
};

struct CompletionRequest {
    std::string backend_name;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_tokens = 512;

    bool operator==(const CompletionRequest&) const = default;
};

struct CompletionResult {
    std::string text;
    std::string request_digest;
    std::string backend_name;
    std::chrono::milliseconds latency{0};
    bool from_cache = false;
    int retries = 0;
};

// Canonical request bytes: a compact JSON object with sorted keys
// {max_tokens, messages, model, temperature}. The model id is part of the
// canonical form so that upgrading a model invalidates cached responses.
// Message content bytes are embedded untouched.
std::string canonical_request_json(const std::string& model_id, const CompletionRequest& request);

// SHA-256 hex digest of the canonical request bytes.
std::string cache_key(const std::string& model_id, const CompletionRequest& request);

// Uniform chat-completion access. Implementations must be safe for
// concurrent invocation; mocks and live backends satisfy the same contract.
class Backend {
public:
    virtual ~Backend() = default;

    virtual CompletionResult complete(const CompletionRequest& request) = 0;
    virtual const BackendConfig& config() const = 0;
};

// Throws config_error unless the request has at least one user message.
void validate_request(const CompletionRequest& request);

} // namespace pairjudge

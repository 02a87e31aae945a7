#include "pairjudge/backend.hpp"

#include "pairjudge/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace pairjudge {

using nlohmann::json;

std::string to_string(Role role) {
    return role == Role::System ? "system" : "user";
}

Role role_from_string(const std::string& name) {
    if (name == "system") {
        return Role::System;
    }
    if (name == "user") {
        return Role::User;
    }
    throw error("unknown message role '" + name + "' (expected system or user)");
}

std::string canonical_request_json(const std::string& model_id, const CompletionRequest& request) {
    // nlohmann::json keeps object keys sorted, which gives the stable field
    // order; dump() emits no insignificant whitespace. Message content goes
    // in untouched.
    json canonical;
    canonical["model"] = model_id;
    canonical["temperature"] = request.temperature;
    canonical["max_tokens"] = request.max_tokens;
    json messages = json::array();
    for (const auto& message : request.messages) {
        messages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
    }
    canonical["messages"] = std::move(messages);
    return canonical.dump();
}

std::string cache_key(const std::string& model_id, const CompletionRequest& request) {
    return sha256_hex(canonical_request_json(model_id, request));
}

void validate_request(const CompletionRequest& request) {
    const bool has_user = std::any_of(request.messages.begin(), request.messages.end(),
                                      [](const Message& m) { return m.role == Role::User; });
    if (!has_user) {
        throw config_error("completion request must contain at least one user message");
    }
}

} // namespace pairjudge

#pragma once

#include "pairjudge/backend.hpp"

namespace pairjudge {

// Chat-completion over HTTP: POST {base_url}/chat/completions with a JSON
// body {model, messages, temperature, max_tokens}, reading the first
// choice's message content. If the api_key_env variable is set, its value
// is sent as a bearer token; credentials never appear in logs or files.
//
// Error mapping: connection failures and 429/5xx become transport_error
// (retryable by the retry layer), request timeouts become timeout_error,
// any other non-2xx status or an unparseable body becomes protocol_error
// carrying the status and a body excerpt.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(BackendConfig config);

    CompletionResult complete(const CompletionRequest& request) override;
    const BackendConfig& config() const override { return config_; }

private:
    BackendConfig config_;
};

} // namespace pairjudge

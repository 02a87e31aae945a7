#include "pairjudge/http_backend.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <string>

namespace pairjudge {

using nlohmann::json;

namespace {

constexpr const char* kCompletionsPath = "/chat/completions";
constexpr std::size_t kBodyExcerptChars = 200;

struct ParsedUrl {
    std::string origin; // scheme://host[:port]
    std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& base_url) {
    const std::size_t scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw config_error("base_url must include a scheme: " + base_url);
    }
    const std::size_t path_start = base_url.find('/', scheme_end + 3);
    ParsedUrl parsed;
    if (path_start == std::string::npos) {
        parsed.origin = base_url;
    } else {
        parsed.origin = base_url.substr(0, path_start);
        parsed.path_prefix = base_url.substr(path_start);
        while (!parsed.path_prefix.empty() && parsed.path_prefix.back() == '/') {
            parsed.path_prefix.pop_back();
        }
    }
    return parsed;
}

std::string body_excerpt(const std::string& body) {
    if (body.size() <= kBodyExcerptChars) {
        return body;
    }
    return body.substr(0, kBodyExcerptChars) + "...";
}

} // namespace

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
    parse_base_url(config_.base_url); // fail fast on malformed URLs
}

CompletionResult HttpBackend::complete(const CompletionRequest& request) {
    validate_request(request);

    const ParsedUrl url = parse_base_url(config_.base_url);
    std::string path = url.path_prefix + kCompletionsPath;
    if (url.path_prefix.size() >= std::strlen(kCompletionsPath) &&
        url.path_prefix.compare(url.path_prefix.size() - std::strlen(kCompletionsPath),
                                std::string::npos, kCompletionsPath) == 0) {
        path = url.path_prefix;
    }

    json body;
    body["model"] = config_.model_id;
    json messages = json::array();
    for (const auto& message : request.messages) {
        messages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
    }
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;

    httplib::Client client(url.origin);
    const auto timeout = config_.timeout;
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                  (timeout % std::chrono::seconds(1)).count() * 1000);
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                            (timeout % std::chrono::seconds(1)).count() * 1000);
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                             (timeout % std::chrono::seconds(1)).count() * 1000);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    const auto started = std::chrono::steady_clock::now();
    httplib::Result result = client.Post(path, headers, body.dump(), "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    if (!result) {
        const bool timed_out = result.error() == httplib::Error::ConnectionTimeout ||
                               ((result.error() == httplib::Error::Read ||
                                 result.error() == httplib::Error::Write) &&
                                elapsed >= timeout);
        const std::string what = config_.name + ": " + httplib::to_string(result.error());
        if (timed_out) {
            throw timeout_error(what + " after " + std::to_string(elapsed.count()) + "ms");
        }
        throw transport_error(what);
    }

    const int status = result->status;
    if (status == 429 || status >= 500) {
        throw transport_error(config_.name + ": HTTP " + std::to_string(status) + ": " +
                              body_excerpt(result->body));
    }
    if (status < 200 || status >= 300) {
        throw protocol_error(status, config_.name + ": HTTP " + std::to_string(status) + ": " +
                                         body_excerpt(result->body));
    }

    std::string text;
    bool parsed_ok = false;
    try {
        const json payload = json::parse(result->body);
        const auto& choices = payload.at("choices");
        if (choices.is_array() && !choices.empty()) {
            text = choices.at(0).at("message").at("content").get<std::string>();
            parsed_ok = true;
        }
    } catch (const json::exception&) {
        parsed_ok = false;
    }
    if (!parsed_ok) {
        throw protocol_error(status, config_.name + ": malformed completion response: " +
                                         body_excerpt(result->body));
    }

    CompletionResult out;
    out.text = std::move(text);
    out.request_digest = cache_key(config_.model_id, request);
    out.backend_name = config_.name;
    out.latency = elapsed;
    out.from_cache = false;
    return out;
}

} // namespace pairjudge

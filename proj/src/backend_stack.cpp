#include "pairjudge/backend_stack.hpp"

#include "pairjudge/http_backend.hpp"
#include "pairjudge/mock_backend.hpp"

#include <utility>

namespace pairjudge {

RetryingBackend::RetryingBackend(std::shared_ptr<Backend> inner, int retry_limit,
                                 std::chrono::milliseconds base_delay, Clock& clock)
    : inner_(std::move(inner)), retry_limit_(retry_limit), base_delay_(base_delay),
      clock_(clock) {}

CompletionResult RetryingBackend::complete(const CompletionRequest& request) {
    int attempt = 0;
    while (true) {
        try {
            CompletionResult result = inner_->complete(request);
            result.retries = attempt;
            return result;
        } catch (const protocol_error&) {
            throw; // not retryable
        } catch (const unscripted_request_error&) {
            throw; // a bug in the script, retrying cannot help
        } catch (const backend_error&) {
            if (attempt >= retry_limit_) {
                throw;
            }
            const auto delay = base_delay_ * (1LL << attempt);
            clock_.sleep_for(std::chrono::duration_cast<std::chrono::milliseconds>(delay));
            ++attempt;
        }
    }
}

RateLimitedBackend::RateLimitedBackend(std::shared_ptr<Backend> inner,
                                       std::shared_ptr<RateLimiter> limiter)
    : inner_(std::move(inner)), limiter_(std::move(limiter)) {}

CompletionResult RateLimitedBackend::complete(const CompletionRequest& request) {
    limiter_->acquire();
    return inner_->complete(request);
}

CachedBackend::CachedBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

CompletionResult CachedBackend::complete(const CompletionRequest& request) {
    const std::string& model_id = inner_->config().model_id;
    const std::string digest = cache_key(model_id, request);
    if (auto cached = cache_->lookup(digest)) {
        CompletionResult result;
        result.text = std::move(*cached);
        result.request_digest = digest;
        result.backend_name = inner_->config().name;
        result.from_cache = true;
        return result;
    }
    CompletionResult result = inner_->complete(request);
    cache_->store(digest, canonical_request_json(model_id, request), inner_->config().name,
                  result.text);
    return result;
}

std::shared_ptr<Backend> build_backend_stack(const BackendConfig& config,
                                             const StackOptions& options) {
    Clock& clock = options.clock ? *options.clock : system_clock();

    std::shared_ptr<Backend> backend;
    if (config.kind == "mock") {
        backend = make_mock(config, MockSpec::from_json_text(
                                        config.mock_behavior_json.empty()
                                            ? std::string(R"({"behavior":"constant"})")
                                            : config.mock_behavior_json));
    } else if (config.kind == "http") {
        backend = std::make_shared<HttpBackend>(config);
    } else {
        throw config_error("backend '" + config.name + "': unknown kind '" + config.kind + "'");
    }

    backend = std::make_shared<RateLimitedBackend>(
        std::move(backend), std::make_shared<RateLimiter>(config.requests_per_minute, clock));
    backend = std::make_shared<RetryingBackend>(std::move(backend), config.retry_limit,
                                                options.retry_base_delay, clock);
    if (options.cache) {
        backend = std::make_shared<CachedBackend>(std::move(backend), options.cache);
    }
    return backend;
}

} // namespace pairjudge

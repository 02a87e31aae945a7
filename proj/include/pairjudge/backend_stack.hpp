#pragma once

#include "pairjudge/backend.hpp"
#include "pairjudge/cache.hpp"
#include "pairjudge/clock.hpp"
#include "pairjudge/rate_limiter.hpp"

#include <map>
#include <memory>
#include <string>

namespace pairjudge {

// Retries transport and timeout failures with exponential backoff
// (base_delay * 2^attempt), up to retry_limit extra attempts. Protocol
// errors are not retried. The result records how many retries it took.
class RetryingBackend final : public Backend {
public:
    RetryingBackend(std::shared_ptr<Backend> inner, int retry_limit,
                    std::chrono::milliseconds base_delay, Clock& clock);

    CompletionResult complete(const CompletionRequest& request) override;
    const BackendConfig& config() const override { return inner_->config(); }

private:
    std::shared_ptr<Backend> inner_;
    int retry_limit_;
    std::chrono::milliseconds base_delay_;
    Clock& clock_;
};

// Admission-controls every completion through a shared per-backend limiter.
class RateLimitedBackend final : public Backend {
public:
    RateLimitedBackend(std::shared_ptr<Backend> inner, std::shared_ptr<RateLimiter> limiter);

    CompletionResult complete(const CompletionRequest& request) override;
    const BackendConfig& config() const override { return inner_->config(); }

private:
    std::shared_ptr<Backend> inner_;
    std::shared_ptr<RateLimiter> limiter_;
};

// Serves repeated requests from the content-addressed cache. Within a run
// and across resumed runs a fixed request always yields the same text.
class CachedBackend final : public Backend {
public:
    CachedBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache);

    CompletionResult complete(const CompletionRequest& request) override;
    const BackendConfig& config() const override { return inner_->config(); }

private:
    std::shared_ptr<Backend> inner_;
    std::shared_ptr<ResponseCache> cache_;
};

struct StackOptions {
    std::shared_ptr<ResponseCache> cache; // nullptr disables caching
    Clock* clock = nullptr;               // defaults to the system clock
    std::chrono::milliseconds retry_base_delay{250};
};

// cache -> retry -> rate limit -> transport (http or mock, per config.kind).
std::shared_ptr<Backend> build_backend_stack(const BackendConfig& config,
                                             const StackOptions& options);

using BackendMap = std::map<std::string, std::shared_ptr<Backend>>;

} // namespace pairjudge

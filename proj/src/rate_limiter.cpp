#include "pairjudge/rate_limiter.hpp"

#include "pairjudge/errors.hpp"

#include <algorithm>

namespace pairjudge {

namespace {
constexpr std::chrono::milliseconds kWindow{60000};
}

RateLimiter::RateLimiter(int requests_per_minute, Clock& clock)
    : limit_(requests_per_minute), clock_(clock) {
    if (requests_per_minute <= 0) {
        throw config_error("requests_per_minute must be positive");
    }
}

void RateLimiter::acquire() {
    while (true) {
        std::chrono::milliseconds wait{0};
        {
            std::lock_guard<std::mutex> lock(mutex_);
            const auto now = clock_.now();
            while (!admissions_.empty() && admissions_.front() + kWindow <= now) {
                admissions_.pop_front();
            }
            if (admissions_.size() < static_cast<std::size_t>(limit_)) {
                admissions_.push_back(now);
                return;
            }
            wait = std::chrono::duration_cast<std::chrono::milliseconds>(
                admissions_.front() + kWindow - now);
        }
        clock_.sleep_for(std::max(wait, std::chrono::milliseconds{1}));
    }
}

} // namespace pairjudge

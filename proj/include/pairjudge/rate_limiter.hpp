#pragma once

#include "pairjudge/clock.hpp"

#include <chrono>
#include <deque>
#include <mutex>

namespace pairjudge {

// Sliding-window admission control: at most `requests_per_minute` calls are
// admitted in any 60-second window, across all threads sharing the limiter.
// acquire() blocks (via the clock) until a slot is free.
class RateLimiter {
public:
    RateLimiter(int requests_per_minute, Clock& clock);

    void acquire();

private:
    int limit_;
    Clock& clock_;
    std::mutex mutex_;
    std::deque<Clock::time_point> admissions_;
};

} // namespace pairjudge

#pragma once

#include <chrono>
#include <mutex>

namespace pairjudge {

// Time source used by the rate limiter and retry backoff so tests can run
// them against a virtual clock instead of sleeping for real.
class Clock {
public:
    using time_point = std::chrono::steady_clock::time_point;

    virtual ~Clock() = default;

    virtual time_point now() = 0;
    virtual void sleep_for(std::chrono::milliseconds duration) = 0;
};

class SystemClock final : public Clock {
public:
    time_point now() override { return std::chrono::steady_clock::now(); }
    void sleep_for(std::chrono::milliseconds duration) override;
};

// Manually advanced clock; sleep_for advances it instantly.
class VirtualClock final : public Clock {
public:
    time_point now() override;
    void sleep_for(std::chrono::milliseconds duration) override;
    void advance(std::chrono::milliseconds duration);

private:
    std::mutex mutex_;
    time_point now_{};
};

// Process-wide default wall clock.
Clock& system_clock();

} // namespace pairjudge

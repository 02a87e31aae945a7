#include "pairjudge/clock.hpp"

#include <thread>

namespace pairjudge {

void SystemClock::sleep_for(std::chrono::milliseconds duration) {
    if (duration.count() > 0) {
        std::this_thread::sleep_for(duration);
    }
}

Clock::time_point VirtualClock::now() {
    std::lock_guard<std::mutex> lock(mutex_);
    return now_;
}

void VirtualClock::sleep_for(std::chrono::milliseconds duration) {
    advance(duration);
}

void VirtualClock::advance(std::chrono::milliseconds duration) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (duration.count() > 0) {
        now_ += duration;
    }
}

Clock& system_clock() {
    static SystemClock clock;
    return clock;
}

} // namespace pairjudge

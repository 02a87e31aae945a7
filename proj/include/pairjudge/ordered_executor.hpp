#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace pairjudge {

// Runs jobs on up to `parallelism` workers but delivers results to `sink`
// strictly in job order, so an append-only journal stays deterministic
// under concurrency. `stop` is polled before every delivery; once it
// returns true nothing further is delivered and workers wind down, leaving
// exactly the already-delivered prefix behind — the shape a killed process
// leaves. Returns the number of results delivered.
template <typename Result>
std::size_t run_ordered(std::size_t parallelism, std::vector<std::function<Result()>>& jobs,
                        const std::function<void(std::size_t, Result&&)>& sink,
                        const std::function<bool()>& stop = nullptr) {
    const std::size_t n = jobs.size();
    if (n == 0) {
        return 0;
    }
    if (parallelism == 0) {
        parallelism = 1;
    }

    std::vector<std::optional<Result>> results(n);
    std::mutex mutex;
    std::atomic<std::size_t> next_job{0};
    std::atomic<bool> stopping{false};
    std::size_t next_flush = 0;
    std::exception_ptr failure;

    auto worker = [&] {
        while (!stopping.load()) {
            const std::size_t index = next_job.fetch_add(1);
            if (index >= n) {
                return;
            }
            try {
                Result result = jobs[index]();
                std::lock_guard<std::mutex> lock(mutex);
                if (failure || stopping.load()) {
                    return;
                }
                results[index] = std::move(result);
                while (next_flush < n && results[next_flush].has_value()) {
                    if (stop && stop()) {
                        stopping.store(true);
                        break;
                    }
                    sink(next_flush, std::move(*results[next_flush]));
                    results[next_flush].reset();
                    ++next_flush;
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                stopping.store(true);
                return;
            }
        }
    };

    if (parallelism == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(parallelism);
        for (std::size_t i = 0; i < parallelism; ++i) {
            threads.emplace_back(worker);
        }
        for (auto& thread : threads) {
            thread.join();
        }
    }

    if (failure) {
        std::rethrow_exception(failure);
    }
    return next_flush;
}

} // namespace pairjudge

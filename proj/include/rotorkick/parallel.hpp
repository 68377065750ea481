#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rotorkick {

// Worker count resolution: explicit request > ROTORKICK_THREADS > hardware.
inline int worker_count(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ROTORKICK_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs f(i) for i in [0, n_tasks) on a bounded pool.  Tasks claim indices
// from a shared counter, so results must be written to per-index slots; any
// exception stops the claiming loop and the first one is rethrown after all
// workers have joined.
template <class F>
inline void parallel_for(int n_tasks, int threads, F&& f) {
    if (n_tasks <= 0) return;
    threads = std::min(std::max(threads, 1), n_tasks);
    if (threads == 1) {
        for (int i = 0; i < n_tasks; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_tasks || failed.load()) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace rotorkick

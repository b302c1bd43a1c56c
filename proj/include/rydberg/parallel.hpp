#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rydberg {

/// Runs f(i) for i in [0, n) on up to hardware_concurrency threads with a
/// static strided split. f must only write to per-index state. The first
/// exception thrown by any worker is rethrown on the caller's thread.
template <typename Func>
void parallel_for(std::size_t n, Func&& f, std::size_t max_threads = 0) {
    std::size_t threads = max_threads ? max_threads : std::thread::hardware_concurrency();
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < n; i += threads) f(i);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace rydberg

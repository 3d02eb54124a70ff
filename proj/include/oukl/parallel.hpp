#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace oukl {

/// Worker count: hardware concurrency, capped by the OUKL_THREADS env var.
inline int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* cap = std::getenv("OUKL_THREADS")) {
        const long v = std::strtol(cap, nullptr, 10);
        if (v >= 1 && v < n) n = static_cast<int>(v);
    }
    return n;
}

/// Runs fn(i) for i in [0,n). Each index is self-contained (own RNG stream,
/// own output slot), so results do not depend on the worker count.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
    const int workers = std::min<std::int64_t>(worker_count(), std::max<std::int64_t>(n, 1));
    if (workers <= 1 || n < 2) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> cursor{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    auto run = [&] {
        const std::int64_t chunk = std::max<std::int64_t>(1, n / (8 * workers));
        while (!failed.load(std::memory_order_relaxed)) {
            const std::int64_t begin = cursor.fetch_add(chunk);
            if (begin >= n) break;
            const std::int64_t end = std::min(n, begin + chunk);
            for (std::int64_t i = begin; i < end; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    bool expected = false;
                    if (failed.compare_exchange_strong(expected, true))
                        first_error = std::current_exception();
                    return;
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace oukl

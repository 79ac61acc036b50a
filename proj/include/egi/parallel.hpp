#pragma once

// Deterministic work distribution: tasks are split into fixed blocks that
// workers claim atomically; per-block results land in preallocated slots,
// so the outcome is identical for any worker count. The EGI_WORKERS
// environment variable overrides the thread count (throughput only).

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace egi {

int worker_count();

// Run fn(i) for i in [0, n), distributing indices over workers. fn must
// write only to its own index's output slot.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int workers = std::min<int>(worker_count(), static_cast<int>(n == 0 ? 1 : n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& th : pool) th.join();
}

}  // namespace egi

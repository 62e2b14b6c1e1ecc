#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace alifs {

inline unsigned default_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1u : n;
}

// Runs fn(task) for task in [0, n_tasks). Results must be written to per-task
// slots so that the reduction order does not depend on scheduling.
template <class F>
void parallel_for(std::size_t n_tasks, unsigned threads, F&& fn) {
    if (n_tasks == 0) return;
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n_tasks);
    if (workers == 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) fn(t);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto body = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= n_tasks) return;
            try {
                fn(t);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                next.store(n_tasks);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t i = 0; i + 1 < workers; ++i) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// Splits n items into `shards` contiguous ranges; shard s gets [begin, end).
inline std::pair<std::size_t, std::size_t> shard_range(std::size_t n, std::size_t shards, std::size_t s) {
    const std::size_t base = n / shards, extra = n % shards;
    const std::size_t begin = s * base + std::min(s, extra);
    return {begin, begin + base + (s < extra ? 1 : 0)};
}

}  // namespace alifs

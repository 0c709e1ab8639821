#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace orbitlab {

/// Fixed sample blocks: block b covers samples [b * block_size, ...) and uses
/// RNG stream child b, so results do not depend on the worker count.
struct BlockPlan {
    std::size_t total = 0;
    std::size_t block_size = 4096;

    std::size_t blocks() const { return (total + block_size - 1) / block_size; }
    std::size_t begin(std::size_t b) const { return b * block_size; }
    std::size_t count(std::size_t b) const { return std::min(block_size, total - begin(b)); }
};

/// Runs fn(block_index) for every block on `workers` threads and returns the
/// per-block results in block order.
template <class Fn>
auto run_blocks(const BlockPlan& plan, std::size_t workers, Fn fn) {
    using Result = decltype(fn(std::size_t{0}));
    std::vector<Result> results(plan.blocks());
    workers = std::max<std::size_t>(1, std::min(workers, plan.blocks()));
    if (workers == 1) {
        for (std::size_t b = 0; b < results.size(); ++b) results[b] = fn(b);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t b = next++; b < results.size(); b = next++) {
                try {
                    results[b] = fn(b);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

}  // namespace orbitlab

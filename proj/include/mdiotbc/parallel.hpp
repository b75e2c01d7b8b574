#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mdiotbc {

inline unsigned default_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

// Calls fn(i) for every i in [0, count) on up to `threads` workers. Work is
// handed out by index, so any result the caller stores at slot i does not
// depend on scheduling. The first exception thrown is rethrown here.
template <class Fn>
void parallel_for(uint64_t count, unsigned threads, Fn&& fn) {
    threads = std::max(1u, threads);
    if (threads == 1 || count <= 1) {
        for (uint64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<uint64_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        for (;;) {
            const uint64_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const uint64_t n_workers = std::min<uint64_t>(threads, count);
    for (uint64_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace mdiotbc

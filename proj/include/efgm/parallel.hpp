#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace efgm {

/// Runs fn(first, last) over [0, n) split into fixed-size chunks claimed by a
/// worker pool. The chunking is independent of the thread count, so any
/// per-chunk results indexed by chunk number are bitwise reproducible; callers
/// needing a reduction should reduce over chunk slots in chunk order.
inline void parallel_chunks(std::size_t n, std::size_t chunk, int threads,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn)
{
    if (n == 0) return;
    if (chunk == 0) chunk = 1;
    const std::size_t nchunks = (n + chunk - 1) / chunk;
    const int nthreads = std::max(1, threads);
    if (nthreads == 1 || nchunks == 1) {
        for (std::size_t c = 0; c < nchunks; ++c)
            fn(c, c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::atomic<std::size_t> counter{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        try {
            for (;;) {
                const std::size_t c = counter.fetch_add(1);
                if (c >= nchunks) return;
                fn(c, c * chunk, std::min(n, (c + 1) * chunk));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    const int spawn = std::min<std::size_t>(nthreads, nchunks);
    pool.reserve(spawn);
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace efgm

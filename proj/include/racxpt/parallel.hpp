#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace racxpt {

inline unsigned default_thread_count() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

// Runs fn(chunk_index) for chunk_index in [0, n_chunks). Chunk outputs must be
// written to per-chunk slots so the merged result is independent of the worker
// count and of scheduling.
inline void parallel_for_chunks(std::size_t n_chunks, unsigned threads,
                                const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n_chunks <= 1) {
        for (std::size_t i = 0; i < n_chunks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    unsigned n_workers = (unsigned)std::min<std::size_t>(threads, n_chunks);
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n_chunks) return;
                fn(i);
            }
        });
    }
    for (auto& t : workers) t.join();
}

}  // namespace racxpt

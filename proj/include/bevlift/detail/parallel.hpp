#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace bevlift::detail {

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) {
        return requested;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

/// Splits [0, total) into contiguous chunks and runs fn(begin, end) on each,
/// one chunk per worker. Chunk boundaries depend only on (total, threads);
/// callers write disjoint output ranges, so results are thread-count
/// independent.
template <typename Fn>
void parallel_chunks(uint64_t total, unsigned threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (threads <= 1 || total < 2 * threads) {
        fn(uint64_t(0), total);
        return;
    }
    const uint64_t chunk = (total + threads - 1) / threads;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        const uint64_t begin = uint64_t(t) * chunk;
        if (begin >= total) {
            break;
        }
        const uint64_t end = std::min(total, begin + chunk);
        workers.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& w : workers) {
        w.join();
    }
}

}  // namespace bevlift::detail

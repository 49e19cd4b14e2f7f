// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace rayns {

/// Worker count to use when the caller asks for 0 (= auto).
inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Runs fn(begin, end) over [0, n) split into fixed-size chunks that
/// workers claim from a shared counter. The chunk boundaries depend only on
/// n, so any per-index output is identical for every worker count.
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned workers, Fn&& fn) {
    workers = resolve_workers(workers);
    constexpr std::size_t kChunk = 1024;
    if (n == 0) return;
    if (workers == 1 || n <= kChunk) {
        fn(std::size_t{0}, n);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(kChunk);
            if (begin >= n) return;
            fn(begin, std::min(begin + kChunk, n));
        }
    };
    std::vector<std::thread> pool;
    const unsigned spawned = static_cast<unsigned>(
        std::min<std::size_t>(workers, (n + kChunk - 1) / kChunk));
    pool.reserve(spawned - 1);
    for (unsigned t = 1; t < spawned; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace rayns

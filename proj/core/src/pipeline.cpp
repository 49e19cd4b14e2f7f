// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#include "rayns/pipeline.hpp"

#include <algorithm>
#include <atomic>

#include "rayns/parallel.hpp"

namespace rayns {

bool NeighborHeap::push(double d2, std::uint32_t id) {
    const std::pair<double, std::uint32_t> entry{d2, id};
    if (!full()) {
        entries_.push_back(entry);
        std::push_heap(entries_.begin(), entries_.end());
        return true;
    }
    if (entry >= entries_.front()) return false;
    std::pop_heap(entries_.begin(), entries_.end());
    entries_.back() = entry;
    std::push_heap(entries_.begin(), entries_.end());
    return true;
}

void NeighborHeap::emit_sorted(std::vector<std::pair<double, std::uint32_t>>& out) {
    out.assign(entries_.begin(), entries_.end());
    std::sort(out.begin(), out.end());
}

namespace {

struct StatsAccumulator {
    std::atomic<std::uint64_t> nodes_visited{0};
    std::atomic<std::uint64_t> leaf_tests{0};
    std::atomic<std::uint64_t> visitor_calls{0};

    void add(const TraversalStats& s) {
        nodes_visited.fetch_add(s.nodes_visited, std::memory_order_relaxed);
        leaf_tests.fetch_add(s.leaf_tests, std::memory_order_relaxed);
        visitor_calls.fetch_add(s.visitor_calls, std::memory_order_relaxed);
    }
    TraversalStats total() const {
        return {nodes_visited.load(), leaf_tests.load(), visitor_calls.load()};
    }
};

}  // namespace

SearchResult range_search(const Bvh& bvh, const std::vector<Point3>& queries,
                          const SearchConfig& cfg) {
    const double r = cfg.radius;
    const std::uint32_t k = cfg.k;
    SearchResult out;
    out.results = ResultSet(queries.size(), k, /*with_distances=*/false);
    StatsAccumulator acc;

    parallel_chunks(queries.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
        TraversalStats local;
        for (std::size_t qi = begin; qi < end; ++qi) {
            const Point3& q = queries[qi];
            std::uint32_t found = 0;
            local += traverse(bvh, make_query_ray(q), [&](std::uint32_t id) {
                if (!cfg.skip_sphere_test && !sphere_test(q, bvh.centers[id], r))
                    return Visit::Continue;
                out.results.append(qi, id);
                ++found;
                return found == k ? Visit::Terminate : Visit::Continue;
            });
        }
        acc.add(local);
    });
    out.stats = acc.total();
    return out;
}

SearchResult knn_search(const Bvh& bvh, const std::vector<Point3>& queries,
                        const SearchConfig& cfg) {
    const double r2 = cfg.radius * cfg.radius;
    const std::uint32_t k = cfg.k;
    SearchResult out;
    out.results = ResultSet(queries.size(), k, /*with_distances=*/true);
    StatsAccumulator acc;

    parallel_chunks(queries.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
        TraversalStats local;
        NeighborHeap heap(k);
        std::vector<std::pair<double, std::uint32_t>> sorted;
        for (std::size_t qi = begin; qi < end; ++qi) {
            const Point3& q = queries[qi];
            heap.reset();
            local += traverse(bvh, make_query_ray(q), [&](std::uint32_t id) {
                const double d2 = dist2(q, bvh.centers[id]);
                if (cfg.skip_sphere_test || d2 < r2) heap.push(d2, id);
                return Visit::Continue;
            });
            heap.emit_sorted(sorted);
            for (const auto& [d2, id] : sorted) {
                out.results.append(qi, id, std::sqrt(d2));
            }
        }
        acc.add(local);
    });
    out.stats = acc.total();
    return out;
}

std::uint64_t result_digest(const ResultSet& results, SearchMode mode) {
    constexpr std::uint64_t kOffset = 14695981039346656037ull;
    constexpr std::uint64_t kPrime = 1099511628211ull;
    auto mix = [](std::uint64_t h, std::uint64_t v) {
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (v >> (8 * byte)) & 0xff;
            h *= kPrime;
        }
        return h;
    };
    std::uint64_t h = kOffset;
    std::vector<std::uint32_t> row;
    for (std::size_t q = 0; q < results.num_queries(); ++q) {
        const auto ids = results.ids(q);
        row.assign(ids.begin(), ids.end());
        if (mode == SearchMode::kRange) std::sort(row.begin(), row.end());
        h = mix(h, row.size());
        for (std::uint32_t id : row) h = mix(h, id);
    }
    return h;
}

}  // namespace rayns

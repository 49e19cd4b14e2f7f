// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#include "rayns/schedule.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <tuple>

#include "rayns/parallel.hpp"
#include "rayns/pipeline.hpp"

namespace rayns {

FirstHitAssignment first_hit_pass(const Bvh& bvh, const std::vector<Point3>& queries,
                                  unsigned workers) {
    FirstHitAssignment out;
    out.leaf_point_id.assign(queries.size(), FirstHitAssignment::kUnassigned);
    std::atomic<std::uint64_t> nodes{0}, tests{0}, calls{0};

    parallel_chunks(queries.size(), workers, [&](std::size_t begin, std::size_t end) {
        TraversalStats local;
        for (std::size_t qi = begin; qi < end; ++qi) {
            local += traverse(bvh, make_query_ray(queries[qi]), [&](std::uint32_t id) {
                out.leaf_point_id[qi] = id;
                return Visit::Terminate;
            });
        }
        nodes.fetch_add(local.nodes_visited, std::memory_order_relaxed);
        tests.fetch_add(local.leaf_tests, std::memory_order_relaxed);
        calls.fetch_add(local.visitor_calls, std::memory_order_relaxed);
    });
    out.stats = {nodes.load(), tests.load(), calls.load()};
    return out;
}

QueryPermutation reorder_queries(const std::vector<Point3>& queries,
                                 const FirstHitAssignment& assignment,
                                 const std::vector<Point3>& points, const Aabb& scene) {
    const std::size_t n = queries.size();
    QueryPermutation out;
    out.perm.resize(n);
    std::iota(out.perm.begin(), out.perm.end(), 0u);

    struct Key {
        std::uint8_t unassigned;
        std::uint64_t morton;
        std::uint32_t group;  // assigned point id; keeps equal-Morton groups apart
    };
    std::vector<Key> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t id = assignment.leaf_point_id[i];
        if (id == FirstHitAssignment::kUnassigned) {
            keys[i] = {1, morton_encode(queries[i], scene).code, FirstHitAssignment::kUnassigned};
        } else {
            keys[i] = {0, morton_encode(points[id], scene).code, id};
        }
    }
    std::sort(out.perm.begin(), out.perm.end(), [&](std::uint32_t a, std::uint32_t b) {
        const Key& ka = keys[a];
        const Key& kb = keys[b];
        return std::tie(ka.unassigned, ka.morton, ka.group, a) <
               std::tie(kb.unassigned, kb.morton, kb.group, b);
    });

    out.inverse.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos) out.inverse[out.perm[pos]] = static_cast<std::uint32_t>(pos);
    return out;
}

Aabb bounds_of(const std::vector<Point3>& points) {
    Aabb b;
    for (const Point3& p : points) b.expand(p);
    return b;
}

}  // namespace rayns

// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "rayns/bvh.hpp"
#include "rayns/geom.hpp"

namespace rayns {

/// Result of the truncated first-hit pass: for each query, the point id of
/// the first leaf AABB its probe ray intersected, or kUnassigned when the
/// query lies in no leaf AABB.
struct FirstHitAssignment {
    static constexpr std::uint32_t kUnassigned = 0xffffffffu;

    std::vector<std::uint32_t> leaf_point_id;
    TraversalStats stats;  // aggregate; visitor_calls == number of assigned queries

    std::size_t assigned_count() const {
        std::size_t n = 0;
        for (std::uint32_t id : leaf_point_id) n += id != kUnassigned;
        return n;
    }
};

/// Casts every query's probe ray and terminates it on the first visitor
/// invocation, so each query costs at most one visitor call.
FirstHitAssignment first_hit_pass(const Bvh& bvh, const std::vector<Point3>& queries,
                                  unsigned workers = 0);

/// A bijection over query indices plus its inverse for unshuffling results.
struct QueryPermutation {
    std::vector<std::uint32_t> perm;     // perm[new_pos] = original index
    std::vector<std::uint32_t> inverse;  // inverse[original index] = new_pos
};

/// Groups queries by their first-hit id, orders the groups by the Morton
/// code of the assigned point (the AABB center), keeps the original order
/// inside each group, and places unassigned queries last ordered by the
/// Morton code of the query position itself.
QueryPermutation reorder_queries(const std::vector<Point3>& queries,
                                 const FirstHitAssignment& assignment,
                                 const std::vector<Point3>& points, const Aabb& scene);

template <typename T>
std::vector<T> apply_permutation(const std::vector<std::uint32_t>& perm,
                                 const std::vector<T>& values) {
    std::vector<T> out;
    out.reserve(perm.size());
    for (std::uint32_t idx : perm) out.push_back(values[idx]);
    return out;
}

/// Bounding box of a point list; invalid() box for an empty list.
Aabb bounds_of(const std::vector<Point3>& points);

}  // namespace rayns

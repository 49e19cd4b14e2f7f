// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "rayns/partition.hpp"

namespace rayns {

/// Relative cost units for the execution model. Defaults encode the
/// published ratios: build-per-AABB to KNN-visitor-call of 1:15000, and
/// build-per-AABB to range-visitor-call of 20:1 without the sphere test,
/// 2:1 with it. Calibration replaces them with measured values.
struct CostCoefficients {
    double k1 = 1.0;          // BVH build cost per AABB
    double k2 = 15000.0;      // KNN visitor cost per call
    double k3_skip = 0.05;    // range visitor cost, sphere test skipped
    double k3_test = 0.5;     // range visitor cost, sphere test performed

    bool valid() const { return k1 > 0 && k2 > 0 && k3_skip > 0 && k3_test > 0; }
};

/// T_build = k1 * M.
double estimate_build_cost(std::size_t num_aabbs, const CostCoefficients& c);

/// T_search = k2 * N * rho * S^3 with rho = K / C^3.
double estimate_search_cost_knn(const QueryPartition& p, const CostCoefficients& c);

/// T_search = k3 * N * K; k3 depends on whether the partition still needs
/// the sphere test.
double estimate_search_cost_range(const QueryPartition& p, const CostCoefficients& c);

/// A tail-merge bundling: with partitions ordered by descending query
/// count, the first num_bundles - 1 stay standalone and the rest merge
/// into one bundle searched at the widest member width.
struct BundlingPlan {
    std::vector<std::uint32_t> order;  // partition indices, descending query count
    std::uint32_t num_bundles = 1;     // M_o
    double total_cost = 0.0;
    std::vector<double> family_costs;  // cost at each M_o in [1, M]
    bool inverse_correlation_held = true;  // widths non-decreasing along `order`
};

/// Scans all M tail-merge plans and returns the cheapest, ties toward the
/// smaller bundle count. Each bundle pays one build of num_points AABBs;
/// a merged bundle's search cost combines the members' N*rho terms at the
/// maximum member width (KNN) or their query counts at the worst visitor
/// rate (range).
BundlingPlan optimal_bundling(const std::vector<QueryPartition>& partitions,
                              std::size_t num_points, SearchMode mode,
                              const CostCoefficients& c);

/// An executable unit: one BVH at `aabb_width`, searched by the merged
/// query list.
struct Bundle {
    double aabb_width = 0.0;
    bool needs_sphere_test = true;
    std::vector<std::uint32_t> query_ids;
    std::vector<std::uint32_t> member_partitions;
};

std::vector<Bundle> apply_bundling(const std::vector<QueryPartition>& partitions,
                                   const BundlingPlan& plan);

}  // namespace rayns

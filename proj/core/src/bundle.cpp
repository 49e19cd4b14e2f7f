// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#include "rayns/bundle.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace rayns {

double estimate_build_cost(std::size_t num_aabbs, const CostCoefficients& c) {
    if (num_aabbs == 0) throw std::invalid_argument("estimate_build_cost: num_aabbs must be >= 1");
    return c.k1 * static_cast<double>(num_aabbs);
}

double estimate_search_cost_knn(const QueryPartition& p, const CostCoefficients& c) {
    const double s3 = p.aabb_width * p.aabb_width * p.aabb_width;
    return c.k2 * static_cast<double>(p.query_ids.size()) * p.density * s3;
}

double estimate_search_cost_range(const QueryPartition& p, const CostCoefficients& c) {
    const double k3 = p.needs_sphere_test ? c.k3_test : c.k3_skip;
    return k3 * static_cast<double>(p.query_ids.size()) * static_cast<double>(p.k);
}

BundlingPlan optimal_bundling(const std::vector<QueryPartition>& partitions,
                              std::size_t num_points, SearchMode mode,
                              const CostCoefficients& c) {
    if (partitions.empty()) throw std::invalid_argument("optimal_bundling: no partitions");
    const std::uint32_t m = static_cast<std::uint32_t>(partitions.size());

    BundlingPlan plan;
    plan.order.resize(m);
    std::iota(plan.order.begin(), plan.order.end(), 0u);
    std::sort(plan.order.begin(), plan.order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (partitions[a].query_ids.size() != partitions[b].query_ids.size())
            return partitions[a].query_ids.size() > partitions[b].query_ids.size();
        if (partitions[a].aabb_width != partitions[b].aabb_width)
            return partitions[a].aabb_width < partitions[b].aabb_width;
        return a < b;
    });
    for (std::uint32_t i = 0; i + 1 < m; ++i) {
        if (partitions[plan.order[i]].aabb_width > partitions[plan.order[i + 1]].aabb_width) {
            plan.inverse_correlation_held = false;
            break;
        }
    }

    // Suffix aggregates over `order` describe the merged tail starting at
    // each position: combined N*rho, combined N, widest member, and whether
    // any member still needs the sphere test.
    std::vector<double> tail_nrho(m + 1, 0.0), tail_n(m + 1, 0.0), tail_maxS(m + 1, 0.0);
    std::vector<std::uint8_t> tail_any_test(m + 1, 0);
    for (std::uint32_t i = m; i-- > 0;) {
        const QueryPartition& p = partitions[plan.order[i]];
        const auto n = static_cast<double>(p.query_ids.size());
        tail_nrho[i] = tail_nrho[i + 1] + n * p.density;
        tail_n[i] = tail_n[i + 1] + n;
        tail_maxS[i] = std::max(tail_maxS[i + 1], p.aabb_width);
        tail_any_test[i] = tail_any_test[i + 1] | (p.needs_sphere_test ? 1 : 0);
    }
    std::vector<double> standalone_prefix(m + 1, 0.0);
    for (std::uint32_t i = 0; i < m; ++i) {
        const QueryPartition& p = partitions[plan.order[i]];
        const double cost = mode == SearchMode::kKnn ? estimate_search_cost_knn(p, c)
                                                     : estimate_search_cost_range(p, c);
        standalone_prefix[i + 1] = standalone_prefix[i] + cost;
    }
    const double build_one = estimate_build_cost(num_points, c);
    const double k_cap = m > 0 ? static_cast<double>(partitions[0].k) : 1.0;

    plan.family_costs.resize(m);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mo = 1; mo <= m; ++mo) {
        const std::uint32_t tail_at = mo - 1;
        double tail_search;
        if (mode == SearchMode::kKnn) {
            const double s = tail_maxS[tail_at];
            tail_search = c.k2 * tail_nrho[tail_at] * s * s * s;
        } else {
            const double k3 = tail_any_test[tail_at] ? c.k3_test : c.k3_skip;
            tail_search = k3 * tail_n[tail_at] * k_cap;
        }
        const double total =
            static_cast<double>(mo) * build_one + standalone_prefix[tail_at] + tail_search;
        plan.family_costs[mo - 1] = total;
        if (total < best) {
            best = total;
            plan.num_bundles = mo;
        }
    }
    plan.total_cost = best;
    return plan;
}

std::vector<Bundle> apply_bundling(const std::vector<QueryPartition>& partitions,
                                   const BundlingPlan& plan) {
    std::vector<Bundle> bundles;
    bundles.reserve(plan.num_bundles);
    for (std::uint32_t i = 0; i + 1 < plan.num_bundles; ++i) {
        const QueryPartition& p = partitions[plan.order[i]];
        Bundle b;
        b.aabb_width = p.aabb_width;
        b.needs_sphere_test = p.needs_sphere_test;
        b.query_ids = p.query_ids;
        b.member_partitions = {plan.order[i]};
        bundles.push_back(std::move(b));
    }
    Bundle tail;
    tail.needs_sphere_test = false;
    for (std::uint32_t i = plan.num_bundles - 1; i < plan.order.size(); ++i) {
        const QueryPartition& p = partitions[plan.order[i]];
        tail.aabb_width = std::max(tail.aabb_width, p.aabb_width);
        tail.needs_sphere_test = tail.needs_sphere_test || p.needs_sphere_test;
        tail.query_ids.insert(tail.query_ids.end(), p.query_ids.begin(), p.query_ids.end());
        tail.member_partitions.push_back(plan.order[i]);
    }
    bundles.push_back(std::move(tail));
    return bundles;
}

}  // namespace rayns

// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#include "rayns/oracle.hpp"

#include <algorithm>

namespace rayns {

std::vector<std::uint32_t> brute_force_knn(const std::vector<Point3>& points, const Point3& q,
                                           double r, std::uint32_t k) {
    const double r2 = r * r;
    std::vector<std::pair<double, std::uint32_t>> hits;
    for (std::uint32_t i = 0; i < points.size(); ++i) {
        const double d2 = dist2(points[i], q);
        if (d2 < r2) hits.emplace_back(d2, i);
    }
    const std::size_t keep = std::min<std::size_t>(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + keep, hits.end());
    std::vector<std::uint32_t> ids(keep);
    for (std::size_t i = 0; i < keep; ++i) ids[i] = hits[i].second;
    return ids;
}

std::vector<std::uint32_t> brute_force_range(const std::vector<Point3>& points, const Point3& q,
                                             double r) {
    const double r2 = r * r;
    std::vector<std::uint32_t> ids;
    for (std::uint32_t i = 0; i < points.size(); ++i) {
        if (dist2(points[i], q) < r2) ids.push_back(i);
    }
    return ids;
}

std::size_t count_within_linf(const std::vector<Point3>& points, const Point3& q,
                              double half_width) {
    std::size_t n = 0;
    for (const Point3& p : points) {
        n += linf_dist(p, q) <= half_width;
    }
    return n;
}

}  // namespace rayns

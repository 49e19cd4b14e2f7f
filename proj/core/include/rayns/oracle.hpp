// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "rayns/geom.hpp"

namespace rayns {

/// Brute-force references for acceptance checks. They use the same strict
/// "<" radius convention as the engine so that equivalence is exact. Only
/// meant for test-scale inputs.

/// Ids of the at-most-K points with squared distance < r^2, ascending by
/// (distance^2, id).
std::vector<std::uint32_t> brute_force_knn(const std::vector<Point3>& points, const Point3& q,
                                           double r, std::uint32_t k);

/// All ids with squared distance < r^2, ascending by id.
std::vector<std::uint32_t> brute_force_range(const std::vector<Point3>& points, const Point3& q,
                                             double r);

/// |{ i : max-axis |points[i] - q| <= half_width }| (closed bound, matching
/// the cubic leaf AABBs).
std::size_t count_within_linf(const std::vector<Point3>& points, const Point3& q,
                              double half_width);

}  // namespace rayns

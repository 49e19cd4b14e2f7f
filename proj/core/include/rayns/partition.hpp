// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rayns/geom.hpp"
#include "rayns/pipeline.hpp"

namespace rayns {

/// Dense uniform grid of per-cell point counts over the scene, with an
/// inclusion-exclusion prefix volume for O(1) box counts.
struct Grid {
    Aabb scene;
    double cell_width = 0.0;  // effective width (may be coarsened to fit the budget)
    std::array<std::int64_t, 3> dims{1, 1, 1};
    std::vector<std::uint32_t> counts;   // x fastest
    std::vector<std::uint64_t> prefix;   // (dims+1) per axis
    std::uint64_t total = 0;

    std::array<std::int64_t, 3> cell_of(const Point3& p) const;
    Point3 cell_center(const std::array<std::int64_t, 3>& c) const;
    std::uint32_t count_at(std::int64_t ix, std::int64_t iy, std::int64_t iz) const;

    /// Points in the inclusive cell range [lo, hi], clamped to the grid.
    std::uint64_t count_box(std::array<std::int64_t, 3> lo, std::array<std::int64_t, 3> hi) const;
};

/// Builds the counting grid. A degenerate scene (all points identical)
/// produces a 1x1x1 grid. The cell width is coarsened when the requested
/// resolution would exceed the cell budget.
Grid build_grid(const std::vector<Point3>& points, double cell_width);

/// Cell width giving about one point per cell, clamped to [r/16, 2r/sqrt(3)].
double default_cell_width(const Aabb& scene, std::size_t num_points, double r);

/// Outcome of growing a query's megacell: the smallest symmetric block of
/// cells around the query's cell holding at least K points, capped by the
/// cube inscribed in the r-sphere around the query.
struct MegacellResult {
    std::uint32_t steps = 0;   // growth iterations
    double width = 0.0;        // C = (2*steps + 1) * cell_width
    bool satisfied = false;    // found >= K points within the cap
    bool capped = false;       // growth stopped at the inscribed-cube bound
};

MegacellResult grow_megacell(const Grid& grid, const Point3& q, double r, std::uint32_t k);

struct WidthDecision {
    double aabb_width = 0.0;  // S
    bool needs_sphere_test = true;
};

/// The paper-faithful AABB width for a megacell, without any eccentricity
/// margin. Unsatisfied megacells fall back to the full width 2r with the
/// sphere test on.
WidthDecision aabb_width_for(const MegacellResult& mc, SearchMode mode, WidthPolicy policy,
                             double r);

/// Ratio of the equi-volume sphere diameter to the megacell width,
/// 2 * cbrt(3 / (4 pi)).
double equi_volume_factor();

/// A group of queries sharing one growth-step count and hence one AABB
/// width. The fallback partition collects queries whose megacell capped
/// short of K points; it searches at full width with the sphere test on.
struct QueryPartition {
    double aabb_width = 0.0;      // S
    double megacell_width = 0.0;  // C
    std::uint32_t steps = 0;
    std::uint32_t k = 1;
    std::vector<std::uint32_t> query_ids;
    double density = 0.0;  // rho = K / C^3
    bool needs_sphere_test = true;
    bool is_fallback = false;
};

/// Grows a megacell per query and groups queries by growth-step count, in
/// ascending step order with the fallback partition last. When
/// cfg.eccentricity_margin is set (the default), widths are derived from
/// C + cell_width so that a query anywhere inside its central cell keeps
/// the megacell's guarantees; the raw paper widths are used otherwise.
std::vector<QueryPartition> partition_queries(const std::vector<Point3>& queries,
                                              const Grid& grid, const SearchConfig& cfg);

}  // namespace rayns

// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#include "rayns/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "rayns/parallel.hpp"
#include "rayns/schedule.hpp"

namespace rayns {

namespace {

constexpr std::uint64_t kMaxGridCells = std::uint64_t{1} << 27;
constexpr std::uint32_t kFallbackKey = 0xffffffffu;

inline double inscribed_cube_width(double r) { return 2.0 * r / std::numbers::sqrt3; }

}  // namespace

std::array<std::int64_t, 3> Grid::cell_of(const Point3& p) const {
    std::array<std::int64_t, 3> c;
    const Point3 rel = p - scene.min;
    const double inv = 1.0 / cell_width;
    c[0] = std::clamp<std::int64_t>(static_cast<std::int64_t>(rel.x * inv), 0, dims[0] - 1);
    c[1] = std::clamp<std::int64_t>(static_cast<std::int64_t>(rel.y * inv), 0, dims[1] - 1);
    c[2] = std::clamp<std::int64_t>(static_cast<std::int64_t>(rel.z * inv), 0, dims[2] - 1);
    return c;
}

Point3 Grid::cell_center(const std::array<std::int64_t, 3>& c) const {
    return {scene.min.x + (static_cast<double>(c[0]) + 0.5) * cell_width,
            scene.min.y + (static_cast<double>(c[1]) + 0.5) * cell_width,
            scene.min.z + (static_cast<double>(c[2]) + 0.5) * cell_width};
}

std::uint32_t Grid::count_at(std::int64_t ix, std::int64_t iy, std::int64_t iz) const {
    return counts[static_cast<std::size_t>((iz * dims[1] + iy) * dims[0] + ix)];
}

std::uint64_t Grid::count_box(std::array<std::int64_t, 3> lo,
                              std::array<std::int64_t, 3> hi) const {
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::max<std::int64_t>(lo[a], 0);
        hi[a] = std::min<std::int64_t>(hi[a], dims[a] - 1);
        if (lo[a] > hi[a]) return 0;
    }
    const std::int64_t px = dims[0] + 1, py = dims[1] + 1;
    auto at = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
        return prefix[static_cast<std::size_t>((z * py + y) * px + x)];
    };
    const std::int64_t x0 = lo[0], y0 = lo[1], z0 = lo[2];
    const std::int64_t x1 = hi[0] + 1, y1 = hi[1] + 1, z1 = hi[2] + 1;
    return at(x1, y1, z1) - at(x0, y1, z1) - at(x1, y0, z1) - at(x1, y1, z0) + at(x0, y0, z1) +
           at(x0, y1, z0) + at(x1, y0, z0) - at(x0, y0, z0);
}

Grid build_grid(const std::vector<Point3>& points, double cell_width) {
    if (!(cell_width > 0.0)) throw std::invalid_argument("build_grid: cell_width must be positive");
    Grid g;
    g.scene = bounds_of(points);
    if (points.empty()) throw std::invalid_argument("build_grid: no points");
    g.cell_width = cell_width;

    const Point3 ext = g.scene.extent();
    auto dims_for = [&](double cw) {
        std::array<std::int64_t, 3> d;
        for (int a = 0; a < 3; ++a) {
            d[a] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(ext[a] / cw)));
        }
        return d;
    };
    g.dims = dims_for(g.cell_width);
    // Coarsen until the dense grid fits the budget.
    while (static_cast<std::uint64_t>(g.dims[0]) * g.dims[1] * g.dims[2] > kMaxGridCells) {
        g.cell_width *= 2.0;
        g.dims = dims_for(g.cell_width);
    }

    g.counts.assign(static_cast<std::size_t>(g.dims[0] * g.dims[1] * g.dims[2]), 0);
    for (const Point3& p : points) {
        const auto c = g.cell_of(p);
        ++g.counts[static_cast<std::size_t>((c[2] * g.dims[1] + c[1]) * g.dims[0] + c[0])];
    }
    g.total = points.size();

    const std::int64_t px = g.dims[0] + 1, py = g.dims[1] + 1, pz = g.dims[2] + 1;
    g.prefix.assign(static_cast<std::size_t>(px * py * pz), 0);
    auto at = [&](std::int64_t x, std::int64_t y, std::int64_t z) -> std::uint64_t& {
        return g.prefix[static_cast<std::size_t>((z * py + y) * px + x)];
    };
    for (std::int64_t z = 1; z < pz; ++z) {
        for (std::int64_t y = 1; y < py; ++y) {
            for (std::int64_t x = 1; x < px; ++x) {
                at(x, y, z) = g.count_at(x - 1, y - 1, z - 1) + at(x - 1, y, z) + at(x, y - 1, z) +
                              at(x, y, z - 1) - at(x - 1, y - 1, z) - at(x - 1, y, z - 1) -
                              at(x, y - 1, z - 1) + at(x - 1, y - 1, z - 1);
            }
        }
    }
    return g;
}

double default_cell_width(const Aabb& scene, std::size_t num_points, double r) {
    const Point3 ext = scene.extent();
    const double volume = std::max(ext.x, 0.0) * std::max(ext.y, 0.0) * std::max(ext.z, 0.0);
    double cw = volume > 0.0 && num_points > 0
                    ? std::cbrt(volume / static_cast<double>(num_points))
                    : r;
    return std::clamp(cw, r / 16.0, inscribed_cube_width(r));
}

MegacellResult grow_megacell(const Grid& grid, const Point3& q, double r, std::uint32_t k) {
    const auto cell = grid.cell_of(q);
    const Point3 cc = grid.cell_center(cell);
    const double cw = grid.cell_width;
    const double bound = r / std::numbers::sqrt3;
    // A megacell of width W fits inside the cube inscribed in the r-sphere
    // around q when, on every axis, the query's offset from the megacell
    // center plus W/2 stays strictly below r/sqrt(3). Strict comparison
    // keeps every megacell point strictly inside the sphere.
    const double ecc = std::max({std::fabs(q.x - cc.x), std::fabs(q.y - cc.y),
                                 std::fabs(q.z - cc.z)});
    auto fits = [&](std::uint32_t steps) {
        const double width = (2.0 * steps + 1.0) * cw;
        return ecc + 0.5 * width < bound;
    };
    auto count_at_steps = [&](std::uint32_t steps) {
        const auto s = static_cast<std::int64_t>(steps);
        return grid.count_box({cell[0] - s, cell[1] - s, cell[2] - s},
                              {cell[0] + s, cell[1] + s, cell[2] + s});
    };

    MegacellResult mc;
    mc.width = cw;
    if (!fits(0)) {
        mc.capped = true;
        return mc;
    }
    std::uint64_t count = count_at_steps(0);
    while (count < k && fits(mc.steps + 1)) {
        ++mc.steps;
        count = count_at_steps(mc.steps);
    }
    mc.width = (2.0 * mc.steps + 1.0) * cw;
    mc.satisfied = count >= k;
    mc.capped = !mc.satisfied;
    return mc;
}

double equi_volume_factor() { return 2.0 * std::cbrt(3.0 / (4.0 * std::numbers::pi)); }

namespace {

WidthDecision width_from_megacell(double megacell_width, bool satisfied, SearchMode mode,
                                  WidthPolicy policy, double r) {
    if (!satisfied) return {2.0 * r, true};
    if (mode == SearchMode::kRange) return {megacell_width, false};
    const double factor =
        policy == WidthPolicy::kConservative ? std::numbers::sqrt3 : equi_volume_factor();
    return {factor * megacell_width, true};
}

}  // namespace

WidthDecision aabb_width_for(const MegacellResult& mc, SearchMode mode, WidthPolicy policy,
                             double r) {
    return width_from_megacell(mc.width, mc.satisfied && !mc.capped, mode, policy, r);
}

std::vector<QueryPartition> partition_queries(const std::vector<Point3>& queries,
                                              const Grid& grid, const SearchConfig& cfg) {
    const double r = cfg.radius;
    const double cw = grid.cell_width;

    std::vector<std::uint32_t> key(queries.size());
    parallel_chunks(queries.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const MegacellResult mc = grow_megacell(grid, queries[i], r, cfg.k);
            key[i] = mc.satisfied ? mc.steps : kFallbackKey;
        }
    });

    std::map<std::uint32_t, std::vector<std::uint32_t>> groups;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        groups[key[i]].push_back(static_cast<std::uint32_t>(i));
    }

    std::vector<QueryPartition> out;
    out.reserve(groups.size());
    for (auto& [steps, ids] : groups) {
        QueryPartition p;
        p.k = cfg.k;
        p.query_ids = std::move(ids);
        if (steps == kFallbackKey) {
            p.is_fallback = true;
            p.steps = kFallbackKey;
            p.megacell_width = inscribed_cube_width(r);
            p.aabb_width = 2.0 * r;
            p.needs_sphere_test = true;
        } else {
            p.steps = steps;
            p.megacell_width = (2.0 * steps + 1.0) * cw;
            const double margined =
                cfg.eccentricity_margin ? p.megacell_width + cw : p.megacell_width;
            WidthDecision d = width_from_megacell(margined, true, cfg.mode, cfg.policy, r);
            if (cfg.mode == SearchMode::kRange) {
                // The sphere-test skip stays valid only up to the inscribed
                // cube width.
                d.aabb_width = std::min(d.aabb_width, inscribed_cube_width(r));
            } else {
                d.aabb_width = std::min(d.aabb_width, 2.0 * r);
            }
            p.aabb_width = d.aabb_width;
            p.needs_sphere_test = d.needs_sphere_test;
        }
        p.density = static_cast<double>(cfg.k) /
                    (p.megacell_width * p.megacell_width * p.megacell_width);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace rayns

// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#include "rayns/geom.hpp"

#include <algorithm>

namespace rayns {

bool ray_aabb_intersect(const Ray& ray, const Aabb& box) {
    // Condition 2: a ray born inside the box intersects it no matter how
    // short the t range is.
    if (aabb_contains(box, ray.origin)) return true;

    // Condition 1: slab test. Axes with zero direction cannot be crossed,
    // so they reject outright when the origin is outside their slab; this
    // also keeps 0 * inf out of the arithmetic.
    double t_enter = ray.t_min;
    double t_exit = ray.t_max;
    for (int axis = 0; axis < 3; ++axis) {
        const double o = ray.origin[axis];
        const double d = ray.direction[axis];
        const double lo = (axis == 0 ? box.min.x : axis == 1 ? box.min.y : box.min.z);
        const double hi = (axis == 0 ? box.max.x : axis == 1 ? box.max.y : box.max.z);
        if (d == 0.0) {
            if (o < lo || o > hi) return false;
            continue;
        }
        const double inv = 1.0 / d;
        double t0 = (lo - o) * inv;
        double t1 = (hi - o) * inv;
        if (t0 > t1) std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
        if (t_enter > t_exit) return false;
    }
    return true;
}

std::uint64_t morton_spread_bits(std::uint64_t v) {
    v &= (1ull << kMortonMaxBitsPerAxis) - 1;
    v = (v | v << 32) & 0x1f00000000ffffull;
    v = (v | v << 16) & 0x1f0000ff0000ffull;
    v = (v | v << 8) & 0x100f00f00f00f00full;
    v = (v | v << 4) & 0x10c30c30c30c30c3ull;
    v = (v | v << 2) & 0x1249249249249249ull;
    return v;
}

namespace {

std::uint64_t quantize_axis(double value, double lo, double hi, int bits) {
    const std::uint64_t max_q = (1ull << bits) - 1;
    const double extent = hi - lo;
    if (!(extent > 0.0)) return 0;  // degenerate axis
    const double t = (value - lo) / extent;
    const double scaled = std::floor(t * static_cast<double>(max_q));
    if (scaled <= 0.0) return 0;
    if (scaled >= static_cast<double>(max_q)) return max_q;
    return static_cast<std::uint64_t>(scaled);
}

}  // namespace

MortonCode morton_encode(const Point3& p, const Aabb& scene, int bits_per_axis) {
    const int bits = std::clamp(bits_per_axis, 1, kMortonMaxBitsPerAxis);
    const std::uint64_t qx = quantize_axis(p.x, scene.min.x, scene.max.x, bits);
    const std::uint64_t qy = quantize_axis(p.y, scene.min.y, scene.max.y, bits);
    const std::uint64_t qz = quantize_axis(p.z, scene.min.z, scene.max.z, bits);
    return {morton_spread_bits(qx) | morton_spread_bits(qy) << 1 | morton_spread_bits(qz) << 2};
}

}  // namespace rayns

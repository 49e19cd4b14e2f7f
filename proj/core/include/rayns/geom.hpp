// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace rayns {

/// A point (or free vector) in 3D scene units. Coordinates produced by the
/// loaders and generators are always finite; NaN/Inf inputs are rejected at
/// module boundaries rather than silently propagated.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

    friend Point3 operator+(Point3 a, Point3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Point3 operator-(Point3 a, Point3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Point3 operator*(Point3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
    friend bool operator==(const Point3&, const Point3&) = default;
};

inline bool is_finite(const Point3& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

/// Squared Euclidean distance.
inline double dist2(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

/// Chebyshev (L-infinity) distance.
inline double linf_dist(const Point3& a, const Point3& b) {
    return std::max({std::fabs(a.x - b.x), std::fabs(a.y - b.y), std::fabs(a.z - b.z)});
}

/// Axis-aligned bounding box, min.c <= max.c on every axis. All faces are
/// closed: boundary points count as inside.
struct Aabb {
    Point3 min{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
               std::numeric_limits<double>::max()};
    Point3 max{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
               std::numeric_limits<double>::lowest()};

    bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }

    Point3 center() const {
        return {0.5 * (min.x + max.x), 0.5 * (min.y + max.y), 0.5 * (min.z + max.z)};
    }
    Point3 extent() const { return max - min; }

    void expand(const Point3& p) {
        min.x = std::min(min.x, p.x);
        min.y = std::min(min.y, p.y);
        min.z = std::min(min.z, p.z);
        max.x = std::max(max.x, p.x);
        max.y = std::max(max.y, p.y);
        max.z = std::max(max.z, p.z);
    }
    void expand(const Aabb& b) {
        expand(b.min);
        expand(b.max);
    }

    /// Encloses `inner` (closed comparison on every face).
    bool encloses(const Aabb& inner) const {
        return min.x <= inner.min.x && min.y <= inner.min.y && min.z <= inner.min.z &&
               max.x >= inner.max.x && max.y >= inner.max.y && max.z >= inner.max.z;
    }

    friend bool operator==(const Aabb&, const Aabb&) = default;
};

/// Cube of width 2*half_width centered at `c`.
inline Aabb cube_around(const Point3& c, double half_width) {
    return {{c.x - half_width, c.y - half_width, c.z - half_width},
            {c.x + half_width, c.y + half_width, c.z + half_width}};
}

/// Half surface area, the usual SAH split metric.
inline double half_surface_area(const Aabb& b) {
    const Point3 e = b.extent();
    return e.x * e.y + e.y * e.z + e.z * e.x;
}

/// Parametric ray P(t) = origin + t * direction, restricted to t in
/// [t_min, t_max]. Query rays use the degenerate segment t_max = 1e-16 so
/// that intersection reduces to origin-in-box.
struct Ray {
    Point3 origin;
    Point3 direction{1.0, 0.0, 0.0};  // unit vector
    double t_min = 0.0;
    double t_max = std::numeric_limits<double>::max();

    Point3 at(double t) const { return origin + direction * t; }
};

/// Point-in-box with closed bounds on all six faces.
inline bool aabb_contains(const Aabb& box, const Point3& p) {
    return p.x >= box.min.x && p.x <= box.max.x && p.y >= box.min.y && p.y <= box.max.y &&
           p.z >= box.min.z && p.z <= box.max.z;
}

/// Ray-AABB test. True when either a slab-test hit parameter lies inside
/// [t_min, t_max], or the ray origin lies inside the box regardless of t.
/// The second disjunct is what makes degenerate short rays act as
/// point-in-box probes.
bool ray_aabb_intersect(const Ray& ray, const Aabb& box);

/// Interleaved Z-order key. 21 bits per axis fills 63 bits of one word,
/// x occupying the lowest bit of each triple.
struct MortonCode {
    std::uint64_t code = 0;
    friend auto operator<=>(const MortonCode&, const MortonCode&) = default;
};

inline constexpr int kMortonMaxBitsPerAxis = 21;

/// Spread the low 21 bits of `v` so bit i lands at bit 3*i.
std::uint64_t morton_spread_bits(std::uint64_t v);

/// Quantize `p` onto a 2^bits grid over `scene` and interleave the axes.
/// Each coordinate maps to floor((p.c - min.c) / (max.c - min.c) * (2^bits - 1)),
/// clamped to [0, 2^bits - 1]; a degenerate scene axis quantizes to 0.
MortonCode morton_encode(const Point3& p, const Aabb& scene,
                         int bits_per_axis = kMortonMaxBitsPerAxis);

}  // namespace rayns

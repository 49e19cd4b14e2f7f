// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "rayns/geom.hpp"

namespace rayns {

/// One node of the hierarchy. Interior nodes store two child indices; leaf
/// nodes store a range [begin, end) into Bvh::leaf_point_ids.
struct BvhNode {
    Aabb box;
    std::uint32_t a = 0;       // leaf: begin; interior: left child
    std::uint32_t b = 0;       // leaf: end;   interior: right child
    std::uint8_t is_leaf = 0;

    std::uint32_t left() const { return a; }
    std::uint32_t right() const { return b; }
    std::uint32_t begin() const { return a; }
    std::uint32_t end() const { return b; }

    friend bool operator==(const BvhNode&, const BvhNode&) = default;
};

/// Traversal work counters. `leaf_tests` counts per-point AABB tests
/// performed at leaves; `visitor_calls` counts the tests that found an
/// intersection and invoked the visitor, so visitor_calls <= leaf_tests.
struct TraversalStats {
    std::uint64_t nodes_visited = 0;
    std::uint64_t leaf_tests = 0;
    std::uint64_t visitor_calls = 0;

    TraversalStats& operator+=(const TraversalStats& o) {
        nodes_visited += o.nodes_visited;
        leaf_tests += o.leaf_tests;
        visitor_calls += o.visitor_calls;
        return *this;
    }
};

enum class Visit : std::uint8_t { Continue, Terminate };

/// Binary hierarchy over one cubic AABB per input point, each of width
/// 2*half_width and centered at its point. Immutable once built; traversal
/// is read-only and safe from any number of threads.
struct Bvh {
    std::vector<BvhNode> nodes;                 // nodes[0] is the root
    std::vector<std::uint32_t> leaf_point_ids;  // permutation of input indices
    std::vector<Point3> centers;                // input points, original order
    double half_width = 0.0;
    std::size_t num_leaf_aabbs = 0;             // M, one AABB per point
    std::uint32_t max_depth = 0;                // leaf depth bound, root = 1

    Aabb leaf_box(std::uint32_t point_id) const {
        return cube_around(centers[point_id], half_width);
    }
};

struct BvhBuildOptions {
    std::uint32_t max_leaf_size = 2;  // SAH leaves hold 1..max points
    std::uint32_t sah_bins = 16;
};

/// Builds the hierarchy with a binned top-down SAH split over the AABB
/// centers. Deterministic: identical input produces identical node arrays.
/// Throws std::invalid_argument on an empty point list ("empty index") or a
/// non-finite coordinate ("invalid point").
Bvh build_bvh(const std::vector<Point3>& points, double half_width,
              const BvhBuildOptions& options = {});

/// Checks the structural invariants: parents enclose children, leaf ranges
/// partition the point set, and every leaf cube lies inside its node box.
bool validate_bvh(const Bvh& bvh);

namespace detail {

/// Small traversal stack; spills to the heap only for degenerate trees.
class TraversalStack {
public:
    void push(std::uint32_t v) {
        if (size_ < kInline) {
            inline_[size_++] = v;
        } else {
            spill_.push_back(v);
            ++size_;
        }
    }
    std::uint32_t pop() {
        --size_;
        if (size_ >= kInline) {
            const std::uint32_t v = spill_.back();
            spill_.pop_back();
            return v;
        }
        return inline_[size_];
    }
    bool empty() const { return size_ == 0; }

private:
    static constexpr std::size_t kInline = 64;
    std::uint32_t inline_[kInline];
    std::size_t size_ = 0;
    std::vector<std::uint32_t> spill_;
};

}  // namespace detail

/// Casts `ray` through the tree, invoking visitor(point_id) once per leaf
/// point whose AABB the ray intersects, in unspecified order, until the
/// visitor returns Visit::Terminate. Stands in for the hardware traversal:
/// the visitor plays the role of the intersection callback.
template <typename Visitor>
TraversalStats traverse(const Bvh& bvh, const Ray& ray, Visitor&& visitor) {
    TraversalStats stats;
    if (bvh.nodes.empty()) return stats;
    detail::TraversalStack stack;
    stack.push(0);
    while (!stack.empty()) {
        const BvhNode& node = bvh.nodes[stack.pop()];
        ++stats.nodes_visited;
        if (!ray_aabb_intersect(ray, node.box)) continue;
        if (!node.is_leaf) {
            stack.push(node.right());
            stack.push(node.left());
            continue;
        }
        for (std::uint32_t i = node.begin(); i < node.end(); ++i) {
            const std::uint32_t id = bvh.leaf_point_ids[i];
            ++stats.leaf_tests;
            if (!ray_aabb_intersect(ray, bvh.leaf_box(id))) continue;
            ++stats.visitor_calls;
            if (visitor(id) == Visit::Terminate) return stats;
        }
    }
    return stats;
}

}  // namespace rayns

// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#include "rayns/bvh.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace rayns {

namespace {

struct BuildTask {
    std::uint32_t node;
    std::uint32_t begin;
    std::uint32_t end;
    std::uint32_t depth;
};

// Every primitive is a cube of one shared size, so node boxes are center
// bounds inflated by half_width; SAH can run on centers alone.
Aabb inflate(const Aabb& centers, double half_width) {
    Aabb b = centers;
    b.min.x -= half_width;
    b.min.y -= half_width;
    b.min.z -= half_width;
    b.max.x += half_width;
    b.max.y += half_width;
    b.max.z += half_width;
    return b;
}

struct SplitChoice {
    int axis = -1;
    std::uint32_t cut_bin = 0;  // first bin of the right side
    double cost = std::numeric_limits<double>::infinity();
};

}  // namespace

Bvh build_bvh(const std::vector<Point3>& points, double half_width,
              const BvhBuildOptions& options) {
    if (points.empty()) throw std::invalid_argument("build_bvh: empty index");
    if (!(half_width > 0.0)) throw std::invalid_argument("build_bvh: half_width must be positive");
    for (const Point3& p : points) {
        if (!is_finite(p)) throw std::invalid_argument("build_bvh: invalid point");
    }

    const std::uint32_t n = static_cast<std::uint32_t>(points.size());
    const std::uint32_t max_leaf = std::max<std::uint32_t>(1, options.max_leaf_size);
    const std::uint32_t bins = std::max<std::uint32_t>(2, options.sah_bins);

    Bvh bvh;
    bvh.centers = points;
    bvh.half_width = half_width;
    bvh.num_leaf_aabbs = n;
    bvh.leaf_point_ids.resize(n);
    std::iota(bvh.leaf_point_ids.begin(), bvh.leaf_point_ids.end(), 0u);
    bvh.nodes.reserve(2 * static_cast<std::size_t>(n));
    bvh.nodes.emplace_back();

    std::vector<Aabb> bin_bounds(bins);
    std::vector<std::uint32_t> bin_counts(bins);
    std::vector<double> right_cost(bins);

    auto bin_of = [bins](double c, double lo, double scale) {
        const auto b = static_cast<std::uint32_t>((c - lo) * scale);
        return std::min(b, bins - 1);
    };

    std::vector<BuildTask> stack;
    stack.push_back({0, 0, n, 1});
    while (!stack.empty()) {
        const BuildTask task = stack.back();
        stack.pop_back();
        const std::uint32_t count = task.end - task.begin;

        Aabb cb;  // bounds of member centers
        for (std::uint32_t i = task.begin; i < task.end; ++i) {
            cb.expand(points[bvh.leaf_point_ids[i]]);
        }
        bvh.nodes[task.node].box = inflate(cb, half_width);
        bvh.max_depth = std::max(bvh.max_depth, task.depth);

        auto make_leaf = [&] {
            bvh.nodes[task.node].a = task.begin;
            bvh.nodes[task.node].b = task.end;
            bvh.nodes[task.node].is_leaf = 1;
        };
        if (count == 1) {
            make_leaf();
            continue;
        }

        SplitChoice best;
        const Point3 cext = cb.extent();
        for (int axis = 0; axis < 3; ++axis) {
            const double lo = cb.min[axis];
            if (!(cext[axis] > 0.0)) continue;
            const double scale = static_cast<double>(bins) / cext[axis];
            std::fill(bin_bounds.begin(), bin_bounds.end(), Aabb{});
            std::fill(bin_counts.begin(), bin_counts.end(), 0u);
            for (std::uint32_t i = task.begin; i < task.end; ++i) {
                const Point3& c = points[bvh.leaf_point_ids[i]];
                const std::uint32_t b = bin_of(c[axis], lo, scale);
                bin_bounds[b].expand(c);
                ++bin_counts[b];
            }
            Aabb acc;
            std::uint32_t acc_count = 0;
            for (std::uint32_t b = bins - 1; b > 0; --b) {
                if (bin_counts[b] > 0) acc.expand(bin_bounds[b]);
                acc_count += bin_counts[b];
                right_cost[b] = acc_count == 0
                                    ? std::numeric_limits<double>::infinity()
                                    : half_surface_area(inflate(acc, half_width)) * acc_count;
            }
            acc = Aabb{};
            acc_count = 0;
            for (std::uint32_t b = 0; b + 1 < bins; ++b) {
                if (bin_counts[b] > 0) acc.expand(bin_bounds[b]);
                acc_count += bin_counts[b];
                if (acc_count == 0 || acc_count == count) continue;
                const double cost =
                    half_surface_area(inflate(acc, half_width)) * acc_count + right_cost[b + 1];
                if (cost < best.cost) {
                    best = {axis, b + 1, cost};
                }
            }
        }

        std::uint32_t mid = task.begin;
        if (best.axis >= 0) {
            const double leaf_cost =
                half_surface_area(bvh.nodes[task.node].box) * static_cast<double>(count);
            if (count <= max_leaf && leaf_cost <= best.cost) {
                make_leaf();
                continue;
            }
            const double lo = cb.min[best.axis];
            const double scale = static_cast<double>(bins) / cext[best.axis];
            auto* ids = bvh.leaf_point_ids.data();
            // Stable partition keeps the build deterministic.
            mid = static_cast<std::uint32_t>(
                std::stable_partition(ids + task.begin, ids + task.end,
                                      [&](std::uint32_t id) {
                                          return bin_of(points[id][best.axis], lo, scale) <
                                                 best.cut_bin;
                                      }) -
                ids);
        }
        if (best.axis < 0 || mid == task.begin || mid == task.end) {
            // Degenerate spread: leaf if small enough, median split otherwise.
            if (count <= max_leaf) {
                make_leaf();
                continue;
            }
            int axis = 0;
            if (cext.y > cext.x) axis = 1;
            if (cext.z > cext[axis]) axis = 2;
            auto* ids = bvh.leaf_point_ids.data();
            mid = task.begin + count / 2;
            std::nth_element(ids + task.begin, ids + mid, ids + task.end,
                             [&](std::uint32_t lhs, std::uint32_t rhs) {
                                 if (points[lhs][axis] != points[rhs][axis])
                                     return points[lhs][axis] < points[rhs][axis];
                                 return lhs < rhs;
                             });
        }

        const auto left = static_cast<std::uint32_t>(bvh.nodes.size());
        bvh.nodes.emplace_back();
        bvh.nodes.emplace_back();
        bvh.nodes[task.node].a = left;
        bvh.nodes[task.node].b = left + 1;
        bvh.nodes[task.node].is_leaf = 0;
        // Right pushed first so the left child is processed and numbered next.
        stack.push_back({left + 1, mid, task.end, task.depth + 1});
        stack.push_back({left, task.begin, mid, task.depth + 1});
    }
    return bvh;
}

bool validate_bvh(const Bvh& bvh) {
    const std::size_t n = bvh.centers.size();
    if (bvh.nodes.empty() || bvh.leaf_point_ids.size() != n) return false;
    if (!(bvh.half_width > 0.0) || bvh.num_leaf_aabbs != n) return false;

    std::vector<std::uint8_t> seen(n, 0);
    std::vector<std::uint32_t> stack{0};
    std::vector<std::uint8_t> reached(bvh.nodes.size(), 0);
    reached[0] = 1;
    std::size_t leaf_total = 0;
    while (!stack.empty()) {
        const std::uint32_t idx = stack.back();
        stack.pop_back();
        const BvhNode& node = bvh.nodes[idx];
        if (!node.box.valid()) return false;
        if (node.is_leaf) {
            if (node.begin() >= node.end() || node.end() > n) return false;
            for (std::uint32_t i = node.begin(); i < node.end(); ++i) {
                const std::uint32_t id = bvh.leaf_point_ids[i];
                if (id >= n || seen[id]) return false;
                seen[id] = 1;
                if (!node.box.encloses(bvh.leaf_box(id))) return false;
            }
            leaf_total += node.end() - node.begin();
            continue;
        }
        if (node.left() >= bvh.nodes.size() || node.right() >= bvh.nodes.size()) return false;
        if (reached[node.left()] || reached[node.right()]) return false;  // shared child
        reached[node.left()] = reached[node.right()] = 1;
        if (!node.box.encloses(bvh.nodes[node.left()].box)) return false;
        if (!node.box.encloses(bvh.nodes[node.right()].box)) return false;
        stack.push_back(node.left());
        stack.push_back(node.right());
    }
    if (leaf_total != n) return false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen[i]) return false;
    }
    return true;
}

}  // namespace rayns

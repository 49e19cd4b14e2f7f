// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rayns/bvh.hpp"
#include "rayns/geom.hpp"

namespace rayns {

enum class SearchMode : std::uint8_t { kRange, kKnn };
enum class WidthPolicy : std::uint8_t { kConservative, kEquiVolume };
enum class OptLevel : std::uint8_t { kNone, kSched, kSchedPart, kSchedPartBundle };

struct SearchConfig {
    SearchMode mode = SearchMode::kKnn;
    double radius = 0.1;          // r > 0
    std::uint32_t k = 1;          // neighbor cap K >= 1
    bool skip_sphere_test = false;  // accept every visited leaf (approximate)
    OptLevel opt = OptLevel::kNone;
    WidthPolicy policy = WidthPolicy::kConservative;
    bool eccentricity_margin = true;  // widen partition AABBs by one cell
    double cell_width = 0.0;          // partitioning grid cell, 0 = auto
    unsigned workers = 0;             // 0 = hardware concurrency
};

/// Per-query neighbor lists with a fixed capacity K. Range results keep
/// visitor order; KNN results are ascending by (distance^2, id).
class ResultSet {
public:
    ResultSet() = default;
    ResultSet(std::size_t num_queries, std::uint32_t k, bool with_distances)
        : num_queries_(num_queries),
          k_(k),
          counts_(num_queries, 0),
          ids_(num_queries * k, 0) {
        if (with_distances) dists_.resize(num_queries * k, 0.0);
    }

    std::size_t num_queries() const { return num_queries_; }
    std::uint32_t capacity() const { return k_; }
    bool has_distances() const { return !dists_.empty(); }

    std::uint32_t count(std::size_t q) const { return counts_[q]; }
    std::span<const std::uint32_t> ids(std::size_t q) const {
        return {ids_.data() + q * k_, counts_[q]};
    }
    std::span<const std::double_t> distances(std::size_t q) const {
        return {dists_.data() + q * k_, counts_[q]};
    }

    void append(std::size_t q, std::uint32_t id) {
        ids_[q * k_ + counts_[q]] = id;
        ++counts_[q];
    }
    void append(std::size_t q, std::uint32_t id, double dist) {
        const std::size_t slot = q * k_ + counts_[q];
        ids_[slot] = id;
        if (!dists_.empty()) dists_[slot] = dist;
        ++counts_[q];
    }
    void clear_row(std::size_t q) { counts_[q] = 0; }

    /// Copies one query's row from another result set (same capacity).
    void assign_row(std::size_t dst_q, const ResultSet& src, std::size_t src_q) {
        counts_[dst_q] = src.counts_[src_q];
        const std::size_t d = dst_q * k_, s = src_q * src.k_;
        for (std::uint32_t i = 0; i < counts_[dst_q]; ++i) ids_[d + i] = src.ids_[s + i];
        if (!dists_.empty() && !src.dists_.empty()) {
            for (std::uint32_t i = 0; i < counts_[dst_q]; ++i) dists_[d + i] = src.dists_[s + i];
        }
    }

private:
    std::size_t num_queries_ = 0;
    std::uint32_t k_ = 0;
    std::vector<std::uint32_t> counts_;
    std::vector<std::uint32_t> ids_;
    std::vector<double> dists_;
};

/// Order-insensitive per-query digest of a result set. Range rows are
/// hashed as sorted id lists; KNN rows in their canonical ascending order.
std::uint64_t result_digest(const ResultSet& results, SearchMode mode);

/// Bounded max-heap of (distance^2, id) pairs with capacity K. The root is
/// the lexicographically largest pair, so rejecting candidates that compare
/// >= the root preserves the (distance, id) tie-break exactly.
class NeighborHeap {
public:
    explicit NeighborHeap(std::uint32_t capacity) : capacity_(capacity) {
        entries_.reserve(capacity);
    }

    std::uint32_t size() const { return static_cast<std::uint32_t>(entries_.size()); }
    bool full() const { return size() == capacity_; }
    double worst_dist2() const { return entries_.front().first; }

    bool push(double d2, std::uint32_t id);

    /// Drains the heap into `out` ascending by (distance^2, id).
    void emit_sorted(std::vector<std::pair<double, std::uint32_t>>& out);

    void reset() { entries_.clear(); }

private:
    std::uint32_t capacity_;
    std::vector<std::pair<double, std::uint32_t>> entries_;
};

/// The degenerate probe ray for a query point: origin q, direction [1,0,0],
/// t in [0, 1e-16].
inline Ray make_query_ray(const Point3& q) { return Ray{q, {1.0, 0.0, 0.0}, 0.0, 1e-16}; }

/// Strict test that `center` lies within Euclidean distance r of q,
/// compared on squared distances.
inline bool sphere_test(const Point3& q, const Point3& center, double r) {
    return dist2(q, center) < r * r;
}

struct SearchResult {
    ResultSet results;
    TraversalStats stats;
};

/// Fixed-radius search: accumulates neighbors in visitor order and
/// terminates each query's traversal once K have been recorded. Which K of
/// a larger neighborhood are kept is traversal-order dependent.
SearchResult range_search(const Bvh& bvh, const std::vector<Point3>& queries,
                          const SearchConfig& cfg);

/// K-nearest search: keeps the K nearest points within distance r,
/// ascending by distance with ties broken toward the lower id. Never
/// terminates a traversal early on count.
SearchResult knn_search(const Bvh& bvh, const std::vector<Point3>& queries,
                        const SearchConfig& cfg);

}  // namespace rayns

// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#include "rayns/pipeline.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "rayns/oracle.hpp"
#include "test_util.hpp"

namespace rayns {
namespace {

TEST(MakeQueryRay, ExactFields) {
    const Ray ray = make_query_ray({0, 0, 0});
    EXPECT_EQ(ray.origin, (Point3{0, 0, 0}));
    EXPECT_EQ(ray.direction, (Point3{1, 0, 0}));
    EXPECT_EQ(ray.t_min, 0.0);
    EXPECT_EQ(ray.t_max, 1e-16);

    const Ray other = make_query_ray({1, 2, 3});
    EXPECT_EQ(other.origin, (Point3{1, 2, 3}));
    EXPECT_EQ(other.t_max - other.t_min, 1e-16);
}

TEST(SphereTest, StrictInequality) {
    EXPECT_TRUE(sphere_test({0, 0, 0}, {0, 0, 0.5}, 1.0));
    EXPECT_FALSE(sphere_test({0, 0, 0}, {1, 0, 0}, 1.0));  // exactly r is out
    EXPECT_TRUE(sphere_test({0.5, 0, 0}, {0, 0, 0}, 0.6));  // 0.25 < 0.36
}

TEST(NeighborHeap, KeepsKSmallestWithIdTieBreak) {
    NeighborHeap heap(2);
    EXPECT_TRUE(heap.push(4.0, 10));
    EXPECT_TRUE(heap.push(1.0, 20));
    EXPECT_FALSE(heap.push(4.0, 30));  // ties at the root lose to lower id
    EXPECT_TRUE(heap.push(4.0, 5));    // same distance, lower id wins
    std::vector<std::pair<double, std::uint32_t>> out;
    heap.emit_sorted(out);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0], (std::pair<double, std::uint32_t>{1.0, 20}));
    EXPECT_EQ(out[1], (std::pair<double, std::uint32_t>{4.0, 5}));
}

SearchConfig base_config(SearchMode mode, double r, std::uint32_t k) {
    SearchConfig cfg;
    cfg.mode = mode;
    cfg.radius = r;
    cfg.k = k;
    cfg.workers = 1;
    return cfg;
}

TEST(RangeSearch, ThreePointExample) {
    const std::vector<Point3> points{{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
    const Bvh bvh = build_bvh(points, 1.0);  // full width 2r with r = 1
    const auto cfg = base_config(SearchMode::kRange, 1.0, 10);

    const SearchResult got = range_search(bvh, {{0.5, 0, 0}}, cfg);
    auto ids = got.results.ids(0);
    std::vector<std::uint32_t> sorted(ids.begin(), ids.end());
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<std::uint32_t>{0, 1}));
}

TEST(RangeSearch, CountThenTerminate) {
    const std::vector<Point3> points{{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
    const Bvh bvh = build_bvh(points, 1.0);
    const auto cfg = base_config(SearchMode::kRange, 1.0, 1);
    const SearchResult got = range_search(bvh, {{0.5, 0, 0}}, cfg);
    ASSERT_EQ(got.results.count(0), 1u);
    const std::uint32_t id = got.results.ids(0)[0];
    EXPECT_TRUE(id == 0 || id == 1);  // membership required, identity unspecified
}

TEST(RangeSearch, FarQueryFindsNothing) {
    const std::vector<Point3> points{{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
    const Bvh bvh = build_bvh(points, 1.0);
    const auto cfg = base_config(SearchMode::kRange, 1.0, 10);
    const SearchResult got = range_search(bvh, {{10, 10, 10}}, cfg);
    EXPECT_EQ(got.results.count(0), 0u);
}

TEST(KnnSearch, SmallExamples) {
    const std::vector<Point3> points{{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
    const Bvh bvh = build_bvh(points, 2.0);  // full width 2r with r = 2
    {
        const auto cfg = base_config(SearchMode::kKnn, 2.0, 1);
        const SearchResult got = knn_search(bvh, {{0.4, 0, 0}}, cfg);
        ASSERT_EQ(got.results.count(0), 1u);
        EXPECT_EQ(got.results.ids(0)[0], 0u);
    }
    {
        const auto cfg = base_config(SearchMode::kKnn, 2.0, 2);
        const SearchResult got = knn_search(bvh, {{0.4, 0, 0}}, cfg);
        ASSERT_EQ(got.results.count(0), 2u);
        EXPECT_EQ(got.results.ids(0)[0], 0u);
        EXPECT_EQ(got.results.ids(0)[1], 1u);
    }
    {
        // K larger than the in-range population: return everyone, sorted.
        const auto cfg = base_config(SearchMode::kKnn, 2.0, 8);
        const SearchResult got = knn_search(bvh, {{0.4, 0, 0}}, cfg);
        ASSERT_EQ(got.results.count(0), 2u);  // point 2 at distance 2.6 is out
        EXPECT_EQ(got.results.ids(0)[0], 0u);
        EXPECT_EQ(got.results.ids(0)[1], 1u);
    }
}

TEST(KnnSearch, NeverTerminatesEarly) {
    test::TestRng rng(123);
    const auto points = test::random_points(500, rng);
    const Bvh bvh = build_bvh(points, 0.3);
    auto cfg = base_config(SearchMode::kKnn, 0.3, 1);
    const SearchResult got = knn_search(bvh, {{0.5, 0.5, 0.5}}, cfg);
    // With K = 1 the traversal must still have examined every intersected
    // leaf, not stopped at the first.
    EXPECT_GT(got.stats.visitor_calls, 1u);
}

TEST(KnnSearch, MatchesBruteForceAcrossConfigs) {
    test::TestRng rng(1234);
    const auto points = test::random_points(3000, rng);
    const auto queries = test::random_points(300, rng);
    for (const double r : {0.05, 0.1, 0.5}) {
        const Bvh bvh = build_bvh(points, r);
        for (const std::uint32_t k : {1u, 5u, 8u, 32u}) {
            const auto cfg = base_config(SearchMode::kKnn, r, k);
            const SearchResult got = knn_search(bvh, queries, cfg);
            for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                const auto want = brute_force_knn(points, queries[qi], r, k);
                const auto ids = got.results.ids(qi);
                ASSERT_EQ(ids.size(), want.size()) << "q=" << qi << " r=" << r << " k=" << k;
                EXPECT_TRUE(std::equal(ids.begin(), ids.end(), want.begin(), want.end()));
            }
        }
    }
}

TEST(KnnSearch, DistancesAscendAndMatchIds) {
    test::TestRng rng(99);
    const auto points = test::random_points(1000, rng);
    const Bvh bvh = build_bvh(points, 0.2);
    const auto cfg = base_config(SearchMode::kKnn, 0.2, 8);
    const auto queries = test::random_points(50, rng);
    const SearchResult got = knn_search(bvh, queries, cfg);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const auto ids = got.results.ids(qi);
        const auto dists = got.results.distances(qi);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            EXPECT_NEAR(dists[i] * dists[i], dist2(points[ids[i]], queries[qi]), 1e-12);
            if (i > 0) EXPECT_LE(dists[i - 1], dists[i]);
        }
    }
}

TEST(RangeSearch, SubsetAndCountContract) {
    test::TestRng rng(777);
    const auto points = test::random_points(2000, rng);
    const auto queries = test::random_points(200, rng);
    const double r = 0.15;
    const Bvh bvh = build_bvh(points, r);
    for (const std::uint32_t k : {1u, 4u, 64u}) {
        const auto cfg = base_config(SearchMode::kRange, r, k);
        const SearchResult got = range_search(bvh, queries, cfg);
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            const auto want = brute_force_range(points, queries[qi], r);
            const auto ids = got.results.ids(qi);
            EXPECT_EQ(ids.size(), std::min<std::size_t>(k, want.size()));
            for (const std::uint32_t id : ids) {
                EXPECT_TRUE(std::binary_search(want.begin(), want.end(), id));
            }
        }
    }
}

TEST(Search, PermutationInvarianceOfKnn) {
    test::TestRng rng(31337);
    const auto points = test::random_points(2000, rng);
    auto queries = test::random_points(400, rng);
    const Bvh bvh = build_bvh(points, 0.1);
    const auto cfg = base_config(SearchMode::kKnn, 0.1, 5);

    const SearchResult direct = knn_search(bvh, queries, cfg);

    std::vector<std::uint32_t> perm(queries.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<Point3> shuffled(queries.size());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = queries[perm[i]];

    const SearchResult permuted = knn_search(bvh, shuffled, cfg);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const auto a = direct.results.ids(perm[i]);
        const auto b = permuted.results.ids(i);
        ASSERT_EQ(a.size(), b.size());
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
}

TEST(Search, WorkerCountDoesNotChangeResults) {
    test::TestRng rng(555);
    const auto points = test::random_points(3000, rng);
    const auto queries = test::random_points(1500, rng);
    const Bvh bvh = build_bvh(points, 0.1);
    auto cfg = base_config(SearchMode::kKnn, 0.1, 8);
    std::uint64_t digests[3];
    int slot = 0;
    for (const unsigned workers : {1u, 4u, 7u}) {
        cfg.workers = workers;
        const SearchResult got = knn_search(bvh, queries, cfg);
        digests[slot++] = result_digest(got.results, SearchMode::kKnn);
    }
    EXPECT_EQ(digests[0], digests[1]);
    EXPECT_EQ(digests[0], digests[2]);
}

TEST(Search, VisitorWorkDominatesReportedCounters) {
    // Both counters are reported; the visitor-facing work (leaf tests) is
    // the bulk of the per-node effort at full width.
    test::TestRng rng(8);
    const auto points = test::random_points(5000, rng);
    const auto queries = test::random_points(500, rng);
    const Bvh bvh = build_bvh(points, 0.2);
    const auto cfg = base_config(SearchMode::kKnn, 0.2, 8);
    const SearchResult got = knn_search(bvh, queries, cfg);
    EXPECT_GT(got.stats.leaf_tests, 0u);
    EXPECT_GT(got.stats.nodes_visited, 0u);
    EXPECT_LE(got.stats.visitor_calls, got.stats.leaf_tests);
}

TEST(ResultDigest, OrderInsensitiveForRangeRows) {
    ResultSet a(1, 4, false), b(1, 4, false);
    a.append(0, 7);
    a.append(0, 3);
    b.append(0, 3);
    b.append(0, 7);
    EXPECT_EQ(result_digest(a, SearchMode::kRange), result_digest(b, SearchMode::kRange));
    EXPECT_NE(result_digest(a, SearchMode::kKnn), result_digest(b, SearchMode::kKnn));
}

}  // namespace
}  // namespace rayns

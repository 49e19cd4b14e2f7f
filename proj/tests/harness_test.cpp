// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#include "rayns/harness.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "rayns/oracle.hpp"
#include "rayns/partition.hpp"
#include "rayns/schedule.hpp"
#include "test_util.hpp"

namespace rayns {
namespace {

TEST(LoadPoints, XyzBasics) {
    std::istringstream in("0 0 0\n1 2 3\n");
    const auto points = load_points(in, PointFormat::kXyz);
    ASSERT_EQ(points.size(), 2u);
    EXPECT_EQ(points[1], (Point3{1, 2, 3}));
}

TEST(LoadPoints, XyzCommentsAndBlanks) {
    std::istringstream in("# header\n\n0.5 0.5 0.5  # trailing comment\n");
    const auto points = load_points(in, PointFormat::kXyz);
    ASSERT_EQ(points.size(), 1u);
    EXPECT_EQ(points[0], (Point3{0.5, 0.5, 0.5}));
}

TEST(LoadPoints, XyzMalformedLineReportsNumber) {
    std::istringstream in("0 0 0\na b c\n");
    try {
        load_points(in, PointFormat::kXyz);
        FAIL() << "expected parse error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(LoadPoints, PlyMinimalHeader) {
    std::istringstream in(
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property float x\nproperty float y\nproperty float z\n"
        "end_header\n0.5 0.5 0.5\n");
    const auto points = load_points(in, PointFormat::kPlyAscii);
    ASSERT_EQ(points.size(), 1u);
    EXPECT_EQ(points[0], (Point3{0.5, 0.5, 0.5}));
}

TEST(LoadPoints, PlySkipsExtraProperties) {
    std::istringstream in(
        "ply\nformat ascii 1.0\ncomment made up\nelement vertex 2\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\n"
        "end_header\n1 2 3 255\n4 5 6 0\n");
    const auto points = load_points(in, PointFormat::kPlyAscii);
    ASSERT_EQ(points.size(), 2u);
    EXPECT_EQ(points[0], (Point3{1, 2, 3}));
    EXPECT_EQ(points[1], (Point3{4, 5, 6}));
}

TEST(LoadPoints, PlyBinaryRejected) {
    std::istringstream in("ply\nformat binary_little_endian 1.0\nend_header\n");
    try {
        load_points(in, PointFormat::kPlyAscii);
        FAIL() << "expected unsupported-format error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("unsupported"), std::string::npos);
    }
}

TEST(SynthPoints, DeterministicAndInUnitCube) {
    const auto a = synth_points(PointDistribution::kUniform, 1000, 9);
    const auto b = synth_points(PointDistribution::kUniform, 1000, 9);
    EXPECT_EQ(a, b);
    for (const Point3& p : a) {
        EXPECT_GE(p.x, 0.0);
        EXPECT_LT(p.x, 1.0);
    }
    EXPECT_EQ(synth_points(PointDistribution::kUniform, 1, 1).size(), 1u);
    EXPECT_NE(synth_points(PointDistribution::kUniform, 1000, 10), a);
}

TEST(SynthPoints, ClusteredDensityDecilesSpread) {
    const auto points = synth_points(PointDistribution::kClustered, 100000, 12);
    const Grid g = build_grid(points, 0.05);
    std::vector<std::uint32_t> occupied;
    for (const std::uint32_t c : g.counts)
        if (c > 0) occupied.push_back(c);
    ASSERT_GE(occupied.size(), 10u);
    std::sort(occupied.begin(), occupied.end());
    // Mean of the densest decile over mean of the sparsest occupied decile.
    const std::size_t decile = occupied.size() / 10;
    double sparse = 0, dense = 0;
    for (std::size_t i = 0; i < decile; ++i) {
        sparse += occupied[i];
        dense += occupied[occupied.size() - 1 - i];
    }
    EXPECT_GE(dense / sparse, 5.0);
}

SearchConfig harness_config(SearchMode mode, OptLevel opt, double r, std::uint32_t k) {
    SearchConfig cfg;
    cfg.mode = mode;
    cfg.opt = opt;
    cfg.radius = r;
    cfg.k = k;
    cfg.workers = 2;
    return cfg;
}

TEST(RunSearch, AllLevelsMatchOracleAndEachOther) {
    const auto points = synth_points(PointDistribution::kClustered, 20000, 21);
    const auto queries = synth_points(PointDistribution::kClustered, 1500, 22);
    const double r = 0.1;
    const std::uint32_t k = 8;

    std::vector<std::uint64_t> digests;
    for (const OptLevel opt : {OptLevel::kNone, OptLevel::kSched, OptLevel::kSchedPart,
                               OptLevel::kSchedPartBundle}) {
        const auto cfg = harness_config(SearchMode::kKnn, opt, r, k);
        const SearchOutcome outcome = run_search(cfg, points, queries);
        digests.push_back(outcome.report.result_digest);
        if (opt == OptLevel::kNone) {
            for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                const auto want = brute_force_knn(points, queries[qi], r, k);
                const auto ids = outcome.results.ids(qi);
                ASSERT_EQ(ids.size(), want.size());
                EXPECT_TRUE(std::equal(ids.begin(), ids.end(), want.begin(), want.end()));
            }
        }
    }
    for (const std::uint64_t d : digests) EXPECT_EQ(d, digests[0]);
}

TEST(RunSearch, BundleCountNeverExceedsPartitionCount) {
    const auto points = synth_points(PointDistribution::kClustered, 30000, 23);
    const auto queries = synth_points(PointDistribution::kClustered, 3000, 24);
    const auto cfg = harness_config(SearchMode::kRange, OptLevel::kSchedPartBundle, 0.1, 8);
    const SearchOutcome outcome = run_search(cfg, points, queries);
    ASSERT_TRUE(outcome.report.partitions.has_value());
    ASSERT_TRUE(outcome.report.bundles.has_value());
    EXPECT_LE(outcome.report.bundles->rows.size(), outcome.report.partitions->rows.size());
    EXPECT_GE(outcome.report.bundles->rows.size(), 1u);
}

TEST(RunSearch, PartitionHistogramShapeOnClusteredData) {
    // Queries drawn from the same clustered distribution: partitions with
    // larger widths should hold no more queries than smaller ones, modulo
    // noise. The check pins the dominant partition to the smaller half.
    const auto points = synth_points(PointDistribution::kClustered, 100000, 25);
    const auto cfg = harness_config(SearchMode::kKnn, OptLevel::kSchedPart, 0.1, 8);
    const SearchOutcome outcome = run_search(cfg, points, points);
    ASSERT_TRUE(outcome.report.partitions.has_value());
    const auto& rows = outcome.report.partitions->rows;  // ascending width
    ASSERT_GE(rows.size(), 2u);
    std::size_t arg_max = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].query_count > rows[arg_max].query_count) arg_max = i;
    }
    EXPECT_LE(arg_max, rows.size() / 2);
    EXPECT_GE(rows.front().query_count, rows.back().query_count);
}

TEST(RunSearch, WorkerCountsAndRerunsGiveIdenticalDigests) {
    const auto points = synth_points(PointDistribution::kClustered, 15000, 26);
    const auto queries = synth_points(PointDistribution::kUniform, 2000, 27);
    auto cfg = harness_config(SearchMode::kKnn, OptLevel::kSchedPartBundle, 0.1, 8);
    std::vector<std::uint64_t> digests;
    for (const unsigned workers : {1u, 2u, 5u}) {
        cfg.workers = workers;
        digests.push_back(run_search(cfg, points, queries).report.result_digest);
    }
    cfg.workers = 2;
    digests.push_back(run_search(cfg, points, queries).report.result_digest);
    for (const std::uint64_t d : digests) EXPECT_EQ(d, digests[0]);
}

TEST(RunSearch, RangeLevelsKeepSubsetContract) {
    const auto points = synth_points(PointDistribution::kUniform, 20000, 28);
    const auto queries = synth_points(PointDistribution::kUniform, 1000, 29);
    const double r = 0.08;
    for (const OptLevel opt : {OptLevel::kNone, OptLevel::kSched, OptLevel::kSchedPart,
                               OptLevel::kSchedPartBundle}) {
        const auto cfg = harness_config(SearchMode::kRange, opt, r, 8);
        const SearchOutcome outcome = run_search(cfg, points, queries);
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            for (const std::uint32_t id : outcome.results.ids(qi)) {
                EXPECT_LT(dist2(points[id], queries[qi]), r * r);
            }
        }
    }
}

TEST(Calibrate, ProducesUsableCoefficients) {
    const auto sample = synth_points(PointDistribution::kUniform, 40000, 31);
    SearchConfig cfg;
    cfg.radius = 0.05;
    cfg.k = 8;
    cfg.workers = 1;
    const CalibrationResult result = calibrate(sample, cfg);
    EXPECT_GT(result.coefficients.k1, 0.0);
    EXPECT_GT(result.coefficients.k2, 0.0);
    EXPECT_GT(result.coefficients.k3_skip, 0.0);
    EXPECT_GT(result.coefficients.k3_test, 0.0);
    EXPECT_GE(result.build_fit_r2, 0.95);
    EXPECT_LT(result.coefficients.k3_skip, result.coefficients.k3_test);
}

TEST(Calibrate, RejectsTinySample) {
    const auto sample = synth_points(PointDistribution::kUniform, 100, 32);
    SearchConfig cfg;
    EXPECT_THROW(calibrate(sample, cfg), std::invalid_argument);
}

TEST(EmitReport, JsonRoundTripsAndIsStable) {
    const auto points = synth_points(PointDistribution::kUniform, 5000, 33);
    const auto queries = synth_points(PointDistribution::kUniform, 500, 34);
    const auto cfg = harness_config(SearchMode::kKnn, OptLevel::kSchedPartBundle, 0.1, 4);

    SearchOutcome a = run_search(cfg, points, queries);
    SearchOutcome b = run_search(cfg, points, queries);

    const std::string json_a = emit_report(a.report, ReportFormat::kJson);
    const std::string json_b = emit_report(b.report, ReportFormat::kJson);
    auto parsed_a = nlohmann::json::parse(json_a);
    auto parsed_b = nlohmann::json::parse(json_b);
    ASSERT_FALSE(parsed_a.is_discarded());

    // Identical apart from the timing block.
    parsed_a.erase("phases_ms");
    parsed_b.erase("phases_ms");
    EXPECT_EQ(parsed_a, parsed_b);
}

TEST(EmitReport, CsvHasFivePhaseRows) {
    RunReport report;
    const std::string csv = emit_report(report, ReportFormat::kCsv);
    std::istringstream in(csv);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(line);
    ASSERT_EQ(rows.size(), 6u);  // header + 5 phases
    EXPECT_EQ(rows[0], "phase,milliseconds");
    const char* names[5] = {"data", "opt", "bvh", "first_search", "search"};
    for (int i = 0; i < 5; ++i) {
        EXPECT_EQ(rows[i + 1].substr(0, std::string(names[i]).size() + 1),
                  std::string(names[i]) + ",");
    }
}

TEST(EmitReport, HumanFormatMentionsEveryPhase) {
    RunReport report;
    const std::string text = emit_report(report, ReportFormat::kHuman);
    for (const char* name : {"data", "opt", "bvh", "first_search", "search", "result_digest"}) {
        EXPECT_NE(text.find(name), std::string::npos) << name;
    }
}

}  // namespace
}  // namespace rayns

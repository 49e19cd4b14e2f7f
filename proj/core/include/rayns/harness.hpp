// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rayns/bundle.hpp"
#include "rayns/pipeline.hpp"

namespace rayns {

enum class PointFormat : std::uint8_t { kXyz, kPlyAscii };
enum class PointDistribution : std::uint8_t { kUniform, kClustered };
enum class ReportFormat : std::uint8_t { kJson, kCsv, kHuman };

/// Parses an .xyz (whitespace triples, '#' comments) or ascii .ply file.
/// Throws std::runtime_error with a line number on malformed input and an
/// unsupported-format error on binary PLY.
std::vector<Point3> load_points(const std::string& path);
std::vector<Point3> load_points(std::istream& in, PointFormat format);

/// Deterministic synthetic clouds in [0,1]^3: uniform, or Gaussian blobs
/// with power-law sizes for a strongly non-uniform density profile.
std::vector<Point3> synth_points(PointDistribution dist, std::size_t n, std::uint64_t seed);

struct PhaseTimings {
    double data_ms = 0.0;
    double opt_ms = 0.0;
    double bvh_ms = 0.0;
    double first_search_ms = 0.0;
    double search_ms = 0.0;
};

struct PartitionRow {
    double aabb_width = 0.0;
    double megacell_width = 0.0;
    std::uint64_t query_count = 0;
    bool needs_sphere_test = true;
    bool is_fallback = false;
};

struct PartitionSummary {
    std::vector<PartitionRow> rows;  // ascending AABB width
    bool inverse_correlation_held = true;
};

struct BundleRow {
    double aabb_width = 0.0;
    std::uint64_t query_count = 0;
    std::uint32_t member_count = 1;
};

struct BundleSummary {
    std::vector<BundleRow> rows;
    double planned_cost = 0.0;
    bool large_k = false;  // the bundling model is known to over-merge for K >= 128
};

struct RunReport {
    SearchConfig config;
    std::size_t num_points = 0;
    std::size_t num_queries = 0;
    unsigned workers_resolved = 1;
    PhaseTimings phases;
    TraversalStats first_search_stats;
    TraversalStats search_stats;
    std::optional<PartitionSummary> partitions;
    std::optional<BundleSummary> bundles;
    CostCoefficients coefficients;
    bool calibrated = false;
    std::uint64_t result_digest = 0;
    std::optional<double> recall;        // vs oracle, when checked
    std::optional<bool> oracle_exact;    // KNN ids+order match, when checked
};

struct SearchOutcome {
    RunReport report;
    ResultSet results;
};

/// Runs the full engine at the configured optimization level and returns
/// the results in the original query order together with the report. The
/// data phase timing is left at zero for the caller to fill in.
SearchOutcome run_search(const SearchConfig& cfg, const std::vector<Point3>& points,
                         const std::vector<Point3>& queries,
                         const CostCoefficients& coefficients = {});

struct CalibrationResult {
    CostCoefficients coefficients;
    double build_fit_r2 = 0.0;
};

/// Measures k1 from BVH builds at several sizes (linear fit), and the
/// visitor costs from timed searches over the sample. Throws
/// std::runtime_error when the timer resolution is too coarse to observe
/// any work; callers should fall back to the default coefficients then.
CalibrationResult calibrate(const std::vector<Point3>& sample, const SearchConfig& cfg);

std::string emit_report(const RunReport& report, ReportFormat format);

const char* to_string(SearchMode mode);
const char* to_string(WidthPolicy policy);
const char* to_string(OptLevel opt);

}  // namespace rayns

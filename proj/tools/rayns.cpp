// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: loads or synthesizes a point cloud, runs the
// neighbor search at the selected optimization level, and emits a report.
// Exit codes: 0 success, 1 input error, 2 oracle mismatch under
// --check-oracle.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rayns/harness.hpp"
#include "rayns/oracle.hpp"
#include "rayns/schedule.hpp"

namespace {

using rayns::Point3;

struct OracleCheck {
    bool mismatch = false;
    double recall = 1.0;
    bool exact = true;
};

// KNN: exact id+order comparison and micro-averaged recall. Range: subset
// of the true r-neighborhood, and the exact count contract at the
// full-width levels.
OracleCheck check_against_oracle(const rayns::SearchConfig& cfg,
                                 const std::vector<Point3>& points,
                                 const std::vector<Point3>& queries,
                                 const rayns::ResultSet& results) {
    OracleCheck check;
    const bool full_width_level =
        cfg.opt == rayns::OptLevel::kNone || cfg.opt == rayns::OptLevel::kSched;
    const bool exact_expected =
        !cfg.skip_sphere_test &&
        (full_width_level || cfg.mode == rayns::SearchMode::kRange ||
         cfg.policy == rayns::WidthPolicy::kConservative);

    std::size_t truth_total = 0, found_total = 0;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const auto got = results.ids(qi);
        if (cfg.mode == rayns::SearchMode::kKnn) {
            const auto want = rayns::brute_force_knn(points, queries[qi], cfg.radius, cfg.k);
            truth_total += want.size();
            for (std::size_t i = 0; i < got.size(); ++i) {
                for (std::uint32_t w : want) {
                    if (w == got[i]) {
                        ++found_total;
                        break;
                    }
                }
            }
            if (got.size() != want.size() ||
                !std::equal(got.begin(), got.end(), want.begin(), want.end())) {
                check.exact = false;
                if (exact_expected) check.mismatch = true;
            }
        } else {
            const auto want = rayns::brute_force_range(points, queries[qi], cfg.radius);
            truth_total += std::min<std::size_t>(want.size(), cfg.k);
            found_total += got.size();
            if (!cfg.skip_sphere_test) {
                for (std::uint32_t id : got) {
                    if (!std::binary_search(want.begin(), want.end(), id)) {
                        check.mismatch = true;  // returned a non-neighbor
                        check.exact = false;
                    }
                }
            }
            if (got.size() != std::min<std::size_t>(want.size(), cfg.k)) {
                check.exact = false;
                if (full_width_level && !cfg.skip_sphere_test) check.mismatch = true;
            }
        }
    }
    check.recall = truth_total == 0
                       ? 1.0
                       : static_cast<double>(std::min(found_total, truth_total)) /
                             static_cast<double>(truth_total);
    return check;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BVH ray-cast neighbor search benchmark harness"};

    std::string points_file, queries_spec = "same-as-points", synth = "uniform";
    std::size_t n = 100000, nq = 0;
    std::uint64_t seed = 1;
    bool use_synth = false;

    rayns::SearchConfig cfg;
    cfg.mode = rayns::SearchMode::kKnn;
    cfg.radius = 0.1;
    cfg.k = 8;
    cfg.opt = rayns::OptLevel::kSchedPartBundle;

    std::string mode_str = "knn", opt_str = "bundle", policy_str = "conservative",
                format_str = "human";
    bool run_calibration = false, check_oracle = false, no_margin = false;

    app.add_option("--points", points_file, "Point cloud file (.xyz or ascii .ply)");
    app.add_option("--synth", synth, "Synthesize points: uniform|clustered")
        ->check(CLI::IsMember({"uniform", "clustered"}))
        ->expected(0, 1);
    auto* synth_flag = app.get_option("--synth");
    app.add_option("--n", n, "Number of synthetic points");
    app.add_option("--seed", seed, "Synthesis seed");
    app.add_option("--queries", queries_spec, "Query file, or same-as-points");
    app.add_option("--nq", nq, "Synthesize this many uniform queries over the scene");
    app.add_option("--mode", mode_str, "knn|range")->check(CLI::IsMember({"knn", "range"}));
    app.add_option("-r,--radius", cfg.radius, "Search radius");
    app.add_option("-K,--max-neighbors", cfg.k, "Neighbor cap");
    app.add_option("--opt", opt_str, "none|sched|part|bundle")
        ->check(CLI::IsMember({"none", "sched", "part", "bundle"}));
    app.add_option("--policy", policy_str, "conservative|equivolume")
        ->check(CLI::IsMember({"conservative", "equivolume"}));
    app.add_option("--cell-width", cfg.cell_width, "Partitioning grid cell width (0 = auto)");
    app.add_flag("--calibrate", run_calibration, "Profile cost coefficients before planning");
    app.add_option("--format", format_str, "json|csv|human")
        ->check(CLI::IsMember({"json", "csv", "human"}));
    app.add_flag("--check-oracle", check_oracle, "Compare against brute force");
    app.add_option("--workers", cfg.workers, "Worker threads (0 = auto)");
    app.add_flag("--skip-sphere-test", cfg.skip_sphere_test,
                 "Accept every AABB hit (approximate search)");
    app.add_flag("--no-margin", no_margin,
                 "Disable the one-cell eccentricity margin on partition widths");

    CLI11_PARSE(app, argc, argv);

    cfg.mode = mode_str == "knn" ? rayns::SearchMode::kKnn : rayns::SearchMode::kRange;
    cfg.policy = policy_str == "conservative" ? rayns::WidthPolicy::kConservative
                                              : rayns::WidthPolicy::kEquiVolume;
    cfg.eccentricity_margin = !no_margin;
    if (opt_str == "none") cfg.opt = rayns::OptLevel::kNone;
    if (opt_str == "sched") cfg.opt = rayns::OptLevel::kSched;
    if (opt_str == "part") cfg.opt = rayns::OptLevel::kSchedPart;
    if (opt_str == "bundle") cfg.opt = rayns::OptLevel::kSchedPartBundle;
    use_synth = points_file.empty() || synth_flag->count() > 0;

    rayns::ReportFormat format = rayns::ReportFormat::kHuman;
    if (format_str == "json") format = rayns::ReportFormat::kJson;
    if (format_str == "csv") format = rayns::ReportFormat::kCsv;

    try {
        const auto data_start = std::chrono::steady_clock::now();
        std::vector<Point3> points;
        if (!points_file.empty()) {
            points = rayns::load_points(points_file);
            if (points.empty()) throw std::runtime_error("no points in " + points_file);
        } else if (use_synth) {
            const auto dist = synth == "clustered" ? rayns::PointDistribution::kClustered
                                                   : rayns::PointDistribution::kUniform;
            points = rayns::synth_points(dist, n, seed);
        }

        std::vector<Point3> queries;
        if (nq > 0) {
            // Uniform queries over the point cloud's bounding box.
            const rayns::Aabb scene = rayns::bounds_of(points);
            const auto raw = rayns::synth_points(rayns::PointDistribution::kUniform, nq,
                                                 seed + 0x9e3779b9ull);
            queries.reserve(nq);
            const Point3 ext = scene.extent();
            for (const Point3& u : raw) {
                queries.push_back({scene.min.x + u.x * ext.x, scene.min.y + u.y * ext.y,
                                   scene.min.z + u.z * ext.z});
            }
        } else if (queries_spec == "same-as-points") {
            queries = points;
        } else {
            queries = rayns::load_points(queries_spec);
            if (queries.empty()) throw std::runtime_error("no queries in " + queries_spec);
        }
        const double data_ms = std::chrono::duration<double, std::milli>(
                                   std::chrono::steady_clock::now() - data_start)
                                   .count();

        rayns::CostCoefficients coefficients;
        bool calibrated = false;
        if (run_calibration) {
            try {
                coefficients = rayns::calibrate(points, cfg).coefficients;
                calibrated = true;
            } catch (const std::exception& e) {
                std::cerr << "calibration failed (" << e.what()
                          << "); using default coefficient ratios\n";
            }
        }

        rayns::SearchOutcome outcome = rayns::run_search(cfg, points, queries, coefficients);
        outcome.report.phases.data_ms = data_ms;
        outcome.report.calibrated = calibrated;

        int exit_code = 0;
        if (check_oracle) {
            const OracleCheck check =
                check_against_oracle(cfg, points, queries, outcome.results);
            outcome.report.recall = check.recall;
            if (cfg.mode == rayns::SearchMode::kKnn) outcome.report.oracle_exact = check.exact;
            if (check.mismatch) exit_code = 2;
        }

        std::cout << rayns::emit_report(outcome.report, format);
        return exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

// Copyright (c) 2026 The rayns authors.
// SPDX-License-Identifier: Apache-2.0
#include "rayns/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rayns/oracle.hpp"
#include "rayns/parallel.hpp"
#include "rayns/partition.hpp"
#include "rayns/schedule.hpp"

namespace rayns {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
    throw std::runtime_error("parse error at line " + std::to_string(line) + ": " + what);
}

std::vector<Point3> load_xyz(std::istream& in) {
    std::vector<Point3> points;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        Point3 p;
        if (!(ls >> p.x)) continue;  // blank or comment-only line
        if (!(ls >> p.y >> p.z)) parse_fail(line_no, "expected three coordinates");
        double extra;
        if (ls >> extra) parse_fail(line_no, "trailing fields");
        if (!is_finite(p)) parse_fail(line_no, "non-finite coordinate");
        points.push_back(p);
    }
    return points;
}

std::vector<Point3> load_ply_ascii(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    auto next_line = [&]() -> std::string& {
        if (!std::getline(in, line)) parse_fail(line_no, "unexpected end of file");
        ++line_no;
        return line;
    };

    if (next_line() != "ply") parse_fail(line_no, "missing ply magic");
    std::size_t vertex_count = 0;
    bool in_vertex_element = false;
    bool saw_format = false;
    int coord_index[3] = {-1, -1, -1};
    int property_count = 0;
    for (;;) {
        std::istringstream ls(next_line());
        std::string word;
        ls >> word;
        if (word == "end_header") break;
        if (word == "comment" || word == "obj_info") continue;
        if (word == "format") {
            std::string kind;
            ls >> kind;
            if (kind != "ascii")
                throw std::runtime_error("unsupported PLY format: " + kind + " (ascii only)");
            saw_format = true;
        } else if (word == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            in_vertex_element = name == "vertex";
            if (in_vertex_element) vertex_count = count;
        } else if (word == "property" && in_vertex_element) {
            std::string type, name;
            ls >> type >> name;
            if (type == "list") parse_fail(line_no, "list property in vertex element");
            if (name == "x") coord_index[0] = property_count;
            if (name == "y") coord_index[1] = property_count;
            if (name == "z") coord_index[2] = property_count;
            ++property_count;
        }
    }
    if (!saw_format) parse_fail(line_no, "missing format line");
    if (coord_index[0] < 0 || coord_index[1] < 0 || coord_index[2] < 0)
        parse_fail(line_no, "vertex element lacks x/y/z properties");

    std::vector<Point3> points;
    points.reserve(vertex_count);
    for (std::size_t v = 0; v < vertex_count; ++v) {
        std::istringstream ls(next_line());
        Point3 p;
        double value;
        for (int field = 0; field < property_count; ++field) {
            if (!(ls >> value)) parse_fail(line_no, "expected vertex field");
            if (field == coord_index[0]) p.x = value;
            if (field == coord_index[1]) p.y = value;
            if (field == coord_index[2]) p.z = value;
        }
        if (!is_finite(p)) parse_fail(line_no, "non-finite coordinate");
        points.push_back(p);
    }
    return points;
}

// splitmix64; the generator is pinned so synthetic clouds are reproducible
// across standard libraries and platforms.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() {  // [0, 1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }
    double gaussian() {
        // Box-Muller; one draw per call keeps the stream simple.
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
};

}  // namespace

std::vector<Point3> load_points(std::istream& in, PointFormat format) {
    return format == PointFormat::kXyz ? load_xyz(in) : load_ply_ascii(in);
}

std::vector<Point3> load_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    PointFormat format = PointFormat::kXyz;
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ply") == 0)
        format = PointFormat::kPlyAscii;
    return load_points(in, format);
}

std::vector<Point3> synth_points(PointDistribution dist, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("synth_points: n must be >= 1");
    std::vector<Point3> points;
    points.reserve(n);
    Rng rng(seed);
    if (dist == PointDistribution::kUniform) {
        for (std::size_t i = 0; i < n; ++i) {
            points.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
        }
        return points;
    }

    // Gaussian blobs; blob weights and spreads follow a power law so cell
    // densities span orders of magnitude.
    constexpr std::size_t kBlobs = 24;
    struct Blob {
        Point3 center;
        double sigma;
        double weight;
    };
    std::vector<Blob> blobs(kBlobs);
    double weight_sum = 0.0;
    for (std::size_t b = 0; b < kBlobs; ++b) {
        blobs[b].center = {rng.uniform(), rng.uniform(), rng.uniform()};
        const double rank = static_cast<double>(b + 1);
        blobs[b].weight = 1.0 / (rank * rank);
        blobs[b].sigma = 0.005 + 0.08 * std::pow(rank / kBlobs, 1.5);
        weight_sum += blobs[b].weight;
    }
    for (auto& b : blobs) b.weight /= weight_sum;

    for (std::size_t i = 0; i < n; ++i) {
        double pick = rng.uniform();
        std::size_t b = 0;
        while (b + 1 < kBlobs && pick > blobs[b].weight) {
            pick -= blobs[b].weight;
            ++b;
        }
        Point3 p = blobs[b].center;
        p.x = std::clamp(p.x + blobs[b].sigma * rng.gaussian(), 0.0, 1.0);
        p.y = std::clamp(p.y + blobs[b].sigma * rng.gaussian(), 0.0, 1.0);
        p.z = std::clamp(p.z + blobs[b].sigma * rng.gaussian(), 0.0, 1.0);
        points.push_back(p);
    }
    return points;
}

namespace {

SearchResult run_one_search(const Bvh& bvh, const std::vector<Point3>& queries,
                            const SearchConfig& cfg, bool skip_sphere_test) {
    SearchConfig local = cfg;
    local.skip_sphere_test = cfg.skip_sphere_test || skip_sphere_test;
    return cfg.mode == SearchMode::kKnn ? knn_search(bvh, queries, local)
                                        : range_search(bvh, queries, local);
}

/// Executes one BVH worth of queries (identified by global query ids) with
/// first-hit reordering, scattering results into the global result set.
void execute_group(const Bvh& bvh, const std::vector<Point3>& all_queries,
                   const std::vector<std::uint32_t>& query_ids, const Aabb& morton_scene,
                   const SearchConfig& cfg, bool skip_sphere_test, ResultSet& global,
                   RunReport& report) {
    std::vector<Point3> group_queries;
    group_queries.reserve(query_ids.size());
    for (std::uint32_t id : query_ids) group_queries.push_back(all_queries[id]);

    auto t0 = Clock::now();
    const FirstHitAssignment assignment = first_hit_pass(bvh, group_queries, cfg.workers);
    report.phases.first_search_ms += ms_since(t0);
    report.first_search_stats += assignment.stats;

    t0 = Clock::now();
    const QueryPermutation perm =
        reorder_queries(group_queries, assignment, bvh.centers, morton_scene);
    const std::vector<Point3> ordered = apply_permutation(perm.perm, group_queries);
    report.phases.opt_ms += ms_since(t0);

    t0 = Clock::now();
    const SearchResult result = run_one_search(bvh, ordered, cfg, skip_sphere_test);
    report.phases.search_ms += ms_since(t0);
    report.search_stats += result.stats;

    for (std::size_t pos = 0; pos < perm.perm.size(); ++pos) {
        global.assign_row(query_ids[perm.perm[pos]], result.results, pos);
    }
}

}  // namespace

SearchOutcome run_search(const SearchConfig& cfg, const std::vector<Point3>& points,
                         const std::vector<Point3>& queries,
                         const CostCoefficients& coefficients) {
    if (!(cfg.radius > 0.0) || !std::isfinite(cfg.radius))
        throw std::invalid_argument("run_search: radius must be positive and finite");
    if (cfg.k < 1) throw std::invalid_argument("run_search: K must be >= 1");

    SearchOutcome out;
    RunReport& report = out.report;
    report.config = cfg;
    report.num_points = points.size();
    report.num_queries = queries.size();
    report.workers_resolved = resolve_workers(cfg.workers);
    report.coefficients = coefficients;

    const bool with_distances = cfg.mode == SearchMode::kKnn;
    out.results = ResultSet(queries.size(), cfg.k, with_distances);

    Aabb morton_scene = bounds_of(points);
    for (const Point3& q : queries) morton_scene.expand(q);

    if (cfg.opt == OptLevel::kNone || cfg.opt == OptLevel::kSched) {
        auto t0 = Clock::now();
        const Bvh bvh = build_bvh(points, cfg.radius);
        report.phases.bvh_ms = ms_since(t0);

        if (cfg.opt == OptLevel::kNone) {
            t0 = Clock::now();
            SearchResult result = run_one_search(bvh, queries, cfg, false);
            report.phases.search_ms = ms_since(t0);
            report.search_stats = result.stats;
            out.results = std::move(result.results);
        } else {
            std::vector<std::uint32_t> all_ids(queries.size());
            for (std::size_t i = 0; i < queries.size(); ++i)
                all_ids[i] = static_cast<std::uint32_t>(i);
            execute_group(bvh, queries, all_ids, morton_scene, cfg, false, out.results, report);
        }
        report.result_digest = result_digest(out.results, cfg.mode);
        return out;
    }

    // Partitioned levels: grid, megacells, per-partition widths, then one
    // BVH per partition (or per bundle).
    auto t0 = Clock::now();
    const double cw = cfg.cell_width > 0.0
                          ? cfg.cell_width
                          : default_cell_width(bounds_of(points), points.size(), cfg.radius);
    const Grid grid = build_grid(points, cw);
    std::vector<QueryPartition> partitions = partition_queries(queries, grid, cfg);
    report.phases.opt_ms += ms_since(t0);

    {
        PartitionSummary summary;
        for (const QueryPartition& p : partitions) {
            summary.rows.push_back({p.aabb_width, p.megacell_width, p.query_ids.size(),
                                    p.needs_sphere_test, p.is_fallback});
        }
        std::sort(summary.rows.begin(), summary.rows.end(),
                  [](const PartitionRow& a, const PartitionRow& b) {
                      return a.aabb_width < b.aabb_width;
                  });
        for (std::size_t i = 0; i + 1 < summary.rows.size(); ++i) {
            if (summary.rows[i].query_count < summary.rows[i + 1].query_count) {
                summary.inverse_correlation_held = false;
                break;
            }
        }
        report.partitions = std::move(summary);
    }

    std::vector<Bundle> bundles;
    if (cfg.opt == OptLevel::kSchedPartBundle) {
        t0 = Clock::now();
        const BundlingPlan plan =
            optimal_bundling(partitions, points.size(), cfg.mode, coefficients);
        bundles = apply_bundling(partitions, plan);
        report.phases.opt_ms += ms_since(t0);

        BundleSummary summary;
        summary.planned_cost = plan.total_cost;
        summary.large_k = cfg.k >= 128;
        for (const Bundle& b : bundles) {
            summary.rows.push_back({b.aabb_width, b.query_ids.size(),
                                    static_cast<std::uint32_t>(b.member_partitions.size())});
        }
        report.bundles = std::move(summary);
    } else {
        for (std::size_t i = 0; i < partitions.size(); ++i) {
            Bundle b;
            b.aabb_width = partitions[i].aabb_width;
            b.needs_sphere_test = partitions[i].needs_sphere_test;
            b.query_ids = partitions[i].query_ids;
            b.member_partitions = {static_cast<std::uint32_t>(i)};
            bundles.push_back(std::move(b));
        }
    }

    for (const Bundle& bundle : bundles) {
        if (bundle.query_ids.empty()) continue;
        t0 = Clock::now();
        const Bvh bvh = build_bvh(points, bundle.aabb_width / 2.0);
        report.phases.bvh_ms += ms_since(t0);
        execute_group(bvh, queries, bundle.query_ids, morton_scene, cfg,
                      !bundle.needs_sphere_test, out.results, report);
    }
    report.result_digest = result_digest(out.results, cfg.mode);
    return out;
}

namespace {

double median3(double a, double b, double c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LinearFit least_squares(const std::vector<std::pair<double, double>>& xy) {
    const auto n = static_cast<double>(xy.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : xy) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    LinearFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    const double mean_y = sy / n;
    double ss_res = 0, ss_tot = 0;
    for (const auto& [x, y] : xy) {
        const double e = y - (fit.slope * x + fit.intercept);
        ss_res += e * e;
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

}  // namespace

CalibrationResult calibrate(const std::vector<Point3>& sample, const SearchConfig& cfg) {
    if (sample.size() < 10000)
        throw std::invalid_argument("calibrate: need at least 10^4 sample points");

    const std::size_t n = sample.size();
    const std::size_t sizes[4] = {n / 8, n / 4, n / 2, n};

    std::vector<std::pair<double, double>> build_times;
    for (const std::size_t size : sizes) {
        const std::vector<Point3> subset(sample.begin(), sample.begin() + size);
        double trials[3];
        for (double& t : trials) {
            const auto t0 = Clock::now();
            const Bvh bvh = build_bvh(subset, cfg.radius);
            t = ms_since(t0);
            if (bvh.num_leaf_aabbs != size) throw std::logic_error("calibrate: bad build");
        }
        build_times.emplace_back(static_cast<double>(size),
                                 median3(trials[0], trials[1], trials[2]));
    }
    const LinearFit fit = least_squares(build_times);
    double total = 0.0;
    for (const auto& [size, t] : build_times) total += t;
    if (total <= 0.0 || fit.slope <= 0.0)
        throw std::runtime_error("calibrate: timer resolution too coarse for BVH builds");

    CalibrationResult out;
    out.coefficients.k1 = fit.slope;
    out.build_fit_r2 = fit.r2;

    // Visitor costs from timed searches over a query subset of the sample.
    const std::size_t nq = std::min<std::size_t>(4000, n);
    const std::vector<Point3> queries(sample.begin(), sample.begin() + nq);
    const Bvh bvh = build_bvh(sample, cfg.radius);

    auto timed_visitor_cost = [&](SearchMode mode, bool skip) -> double {
        SearchConfig probe = cfg;
        probe.mode = mode;
        probe.skip_sphere_test = skip;
        probe.opt = OptLevel::kNone;
        double best_rate = 0.0;
        for (int trial = 0; trial < 3; ++trial) {
            const auto t0 = Clock::now();
            const SearchResult result = mode == SearchMode::kKnn
                                            ? knn_search(bvh, queries, probe)
                                            : range_search(bvh, queries, probe);
            const double t = ms_since(t0);
            if (result.stats.visitor_calls == 0) return 0.0;
            const double rate = t / static_cast<double>(result.stats.visitor_calls);
            best_rate = trial == 0 ? rate : std::min(best_rate, rate);
        }
        return best_rate;
    };
    out.coefficients.k2 = timed_visitor_cost(SearchMode::kKnn, false);
    out.coefficients.k3_test = timed_visitor_cost(SearchMode::kRange, false);
    out.coefficients.k3_skip = timed_visitor_cost(SearchMode::kRange, true);
    if (!out.coefficients.valid())
        throw std::runtime_error("calibrate: timer resolution too coarse for visitor timing");
    return out;
}

namespace {

std::string digest_hex(std::uint64_t digest) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

nlohmann::ordered_json stats_json(const TraversalStats& s) {
    return {{"nodes_visited", s.nodes_visited},
            {"leaf_tests", s.leaf_tests},
            {"visitor_calls", s.visitor_calls}};
}

}  // namespace

std::string emit_report(const RunReport& report, ReportFormat format) {
    const PhaseTimings& ph = report.phases;
    const std::pair<const char*, double> phase_rows[5] = {{"data", ph.data_ms},
                                                          {"opt", ph.opt_ms},
                                                          {"bvh", ph.bvh_ms},
                                                          {"first_search", ph.first_search_ms},
                                                          {"search", ph.search_ms}};

    if (format == ReportFormat::kCsv) {
        std::ostringstream os;
        os << "phase,milliseconds\n";
        for (const auto& [name, value] : phase_rows) os << name << ',' << value << '\n';
        return os.str();
    }

    if (format == ReportFormat::kJson) {
        nlohmann::ordered_json j;
        j["config"] = {{"mode", to_string(report.config.mode)},
                       {"radius", report.config.radius},
                       {"k", report.config.k},
                       {"opt", to_string(report.config.opt)},
                       {"policy", to_string(report.config.policy)},
                       {"skip_sphere_test", report.config.skip_sphere_test},
                       {"eccentricity_margin", report.config.eccentricity_margin},
                       {"cell_width", report.config.cell_width},
                       {"workers", report.workers_resolved}};
        j["input"] = {{"num_points", report.num_points}, {"num_queries", report.num_queries}};
        nlohmann::ordered_json phases;
        for (const auto& [name, value] : phase_rows) phases[name] = value;
        j["phases_ms"] = phases;
        j["stats"] = {{"first_search", stats_json(report.first_search_stats)},
                      {"search", stats_json(report.search_stats)}};
        j["coefficients"] = {{"k1", report.coefficients.k1},
                             {"k2", report.coefficients.k2},
                             {"k3_skip", report.coefficients.k3_skip},
                             {"k3_test", report.coefficients.k3_test},
                             {"calibrated", report.calibrated}};
        if (report.partitions) {
            nlohmann::ordered_json rows = nlohmann::ordered_json::array();
            for (const PartitionRow& p : report.partitions->rows) {
                rows.push_back({{"aabb_width", p.aabb_width},
                                {"megacell_width", p.megacell_width},
                                {"query_count", p.query_count},
                                {"needs_sphere_test", p.needs_sphere_test},
                                {"is_fallback", p.is_fallback}});
            }
            j["partitions"] = {
                {"count", report.partitions->rows.size()},
                {"inverse_correlation_held", report.partitions->inverse_correlation_held},
                {"histogram", rows}};
        } else {
            j["partitions"] = nullptr;
        }
        if (report.bundles) {
            nlohmann::ordered_json rows = nlohmann::ordered_json::array();
            for (const BundleRow& b : report.bundles->rows) {
                rows.push_back({{"aabb_width", b.aabb_width},
                                {"query_count", b.query_count},
                                {"member_count", b.member_count}});
            }
            j["bundles"] = {{"count", report.bundles->rows.size()},
                            {"planned_cost", report.bundles->planned_cost},
                            {"large_k", report.bundles->large_k},
                            {"rows", rows}};
        } else {
            j["bundles"] = nullptr;
        }
        j["result_digest"] = digest_hex(report.result_digest);
        if (report.recall) j["recall"] = *report.recall;
        if (report.oracle_exact) j["oracle_exact"] = *report.oracle_exact;
        return j.dump(2) + "\n";
    }

    // Human-readable table.
    std::ostringstream os;
    os << "mode=" << to_string(report.config.mode) << " r=" << report.config.radius
       << " K=" << report.config.k << " opt=" << to_string(report.config.opt)
       << " policy=" << to_string(report.config.policy)
       << " workers=" << report.workers_resolved << "\n";
    os << "points=" << report.num_points << " queries=" << report.num_queries << "\n\n";
    os << "phase          time_ms\n";
    for (const auto& [name, value] : phase_rows) {
        os << name;
        for (std::size_t pad = std::string(name).size(); pad < 15; ++pad) os << ' ';
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", value);
        os << buf << "\n";
    }
    os << "\nfirst_search: nodes=" << report.first_search_stats.nodes_visited
       << " leaf_tests=" << report.first_search_stats.leaf_tests
       << " visitor_calls=" << report.first_search_stats.visitor_calls << "\n";
    os << "search:       nodes=" << report.search_stats.nodes_visited
       << " leaf_tests=" << report.search_stats.leaf_tests
       << " visitor_calls=" << report.search_stats.visitor_calls << "\n";
    if (report.partitions) {
        os << "\npartitions (" << report.partitions->rows.size() << "), inverse correlation "
           << (report.partitions->inverse_correlation_held ? "held" : "violated") << ":\n";
        os << "  aabb_width  megacell  queries  sphere_test\n";
        for (const PartitionRow& p : report.partitions->rows) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "  %-11.5f %-9.5f %-8llu %s%s\n", p.aabb_width,
                          p.megacell_width, static_cast<unsigned long long>(p.query_count),
                          p.needs_sphere_test ? "yes" : "no", p.is_fallback ? " (fallback)" : "");
            os << buf;
        }
    }
    if (report.bundles) {
        os << "\nbundles (" << report.bundles->rows.size()
           << "), planned cost=" << report.bundles->planned_cost;
        if (report.bundles->large_k) os << " [warning: K >= 128, bundling may over-merge]";
        os << "\n  aabb_width  queries  members\n";
        for (const BundleRow& b : report.bundles->rows) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "  %-11.5f %-8llu %u\n", b.aabb_width,
                          static_cast<unsigned long long>(b.query_count), b.member_count);
            os << buf;
        }
    }
    os << "\nresult_digest " << digest_hex(report.result_digest) << "\n";
    if (report.recall) os << "recall " << *report.recall << "\n";
    if (report.oracle_exact) os << "oracle_exact " << (*report.oracle_exact ? "yes" : "no") << "\n";
    return os.str();
}

const char* to_string(SearchMode mode) {
    return mode == SearchMode::kKnn ? "knn" : "range";
}
const char* to_string(WidthPolicy policy) {
    return policy == WidthPolicy::kConservative ? "conservative" : "equivolume";
}
const char* to_string(OptLevel opt) {
    switch (opt) {
        case OptLevel::kNone: return "none";
        case OptLevel::kSched: return "sched";
        case OptLevel::kSchedPart: return "part";
        case OptLevel::kSchedPartBundle: return "bundle";
    }
    return "unknown";
}

}  // namespace rayns

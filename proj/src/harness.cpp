#include "lrnbv/harness.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace lrnbv {

const char* method_name(Method m) {
    switch (m) {
        case Method::LrNbv: return "lrnbv";
        case Method::Nbv: return "nbv";
        case Method::Heu: return "heu";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::LrNbv, Method::Nbv, Method::Heu})
        if (name == method_name(m)) return m;
    throw std::invalid_argument("unknown method '" + name + "' (expected lrnbv, nbv or heu)");
}

NamedScene load_named_scene(const std::filesystem::path& path) {
    NamedScene out{path.stem().string(), load_scene_file(path.string())};
    if (!out.scene.object.name.empty()) out.name = out.scene.object.name;
    return out;
}

std::string RunArtifacts::stem() const {
    return scene + "_" + method_name(method) + "_" + std::to_string(seed);
}

std::string metrics_header() {
    return "scene,method,seed,est_l,est_w,est_h,iou,poses,coverage_pct,useless_poses";
}

std::string metrics_row(const RunArtifacts& run) {
    const MetricsRecord& m = run.metrics;
    std::string row = run.scene + "," + method_name(run.method) + "," + std::to_string(run.seed);
    for (double d : m.est_dims) row += "," + format_number(d);
    row += "," + format_number(m.iou) + "," + std::to_string(m.pose_count) + "," + format_number(m.coverage_pct) +
           "," + std::to_string(m.useless_poses);
    return row;
}

namespace {

std::string trace_csv(const RunArtifacts& run, const RunConfig& effective, const std::vector<double>& series) {
    std::string out = "# scene = " + run.scene + "\n# method = " + method_name(run.method) +
                      "\n# seed = " + std::to_string(run.seed) +
                      "\n# termination = " + to_string(run.result.termination) + "\n";
    out += echo_config(effective);
    out += "iteration,px,py,pz,qx,qy,qz,qw,u_best,u_best_cached,u_worst_cached,cache_size,from_cache,"
           "object_points,roi_dx,roi_dy,roi_dz,coverage_pct\n";
    for (std::size_t r = 0; r < run.result.trace.size(); ++r) {
        const IterationRecord& rec = run.result.trace[r];
        std::string line = std::to_string(rec.iteration);
        for (double v : rec.executed.to_array()) line += "," + format_number(v);
        line += "," + format_number(rec.u_best) + "," + format_number(rec.u_best_cached) + "," +
                format_number(rec.u_worst_cached) + "," + std::to_string(rec.cache_size) + "," +
                (rec.from_cache ? "1" : "0") + "," + std::to_string(rec.object_points);
        for (int a = 0; a < 3; ++a) line += "," + format_number(rec.roi_dims[a]);
        line += "," + format_number(series[r]) + "\n";
        out += line;
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace

RunArtifacts run_single(const NamedScene& named, const RunConfig& config, Method method, std::uint64_t seed) {
    RunConfig effective = config;
    effective.seed = seed;
    if (method == Method::Nbv) effective.recon = nbv_baseline_config(config.recon);
    validate_config(effective);

    const Scene& scene = named.scene;
    const std::vector<Vec3> reference = surface_samples(scene, effective.coverage_sample_spacing);
    std::vector<double> series;
    const AcquisitionObserver observer = [&](const IterationRecord&, const VoxelMap&,
                                             const std::optional<ObjectEstimate>& object) {
        series.push_back(object ? coverage(object->points, reference, effective.coverage_distance) : 0.0);
    };

    RunArtifacts run;
    run.scene = named.name;
    run.method = method;
    run.seed = seed;
    if (method == Method::Heu)
        run.result = run_heu(scene, effective.recon, effective.ellipse(scene.table_height), seed, observer);
    else
        run.result = lrnbv::run(scene, effective.recon, seed, observer);

    run.metrics = summarize(run.result, scene, series);
    run.trace_csv = trace_csv(run, effective, series);
    std::ostringstream cloud;
    if (run.result.object) write_points(cloud, run.result.object->points);
    run.cloud_xyz = cloud.str();
    return run;
}

void write_run(const RunArtifacts& run, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(dir / (run.stem() + ".metrics.csv"), metrics_header() + "\n" + metrics_row(run) + "\n");
    write_text(dir / (run.stem() + ".trace.csv"), run.trace_csv);
    write_text(dir / (run.stem() + ".xyz"), run.cloud_xyz);
}

const std::vector<std::string>& compared_metrics() {
    static const std::vector<std::string> names{"est_l", "est_w", "est_h", "iou", "poses", "coverage_pct",
                                                "useless_poses"};
    return names;
}

double metric_value(const MetricsRecord& m, const std::string& metric) {
    if (metric == "est_l") return m.est_dims[0];
    if (metric == "est_w") return m.est_dims[1];
    if (metric == "est_h") return m.est_dims[2];
    if (metric == "iou") return m.iou;
    if (metric == "poses") return m.pose_count;
    if (metric == "coverage_pct") return m.coverage_pct;
    if (metric == "useless_poses") return m.useless_poses;
    throw std::invalid_argument("unknown metric '" + metric + "'");
}

CampaignReport run_campaign(const std::vector<NamedScene>& scenes, const RunConfig& config,
                            const std::vector<Method>& methods, const std::vector<std::uint64_t>& seeds) {
    CampaignReport report;
    for (const NamedScene& scene : scenes)
        for (Method method : methods)
            for (std::uint64_t seed : seeds) {
                try {
                    report.runs.push_back(run_single(scene, config, method, seed));
                } catch (const std::exception& e) {
                    throw CampaignError("run failed (scene " + scene.name + ", method " + method_name(method) +
                                        ", seed " + std::to_string(seed) + "): " + e.what());
                }
            }
    if (seeds.size() < 2) return report;

    auto values = [&](const std::string& scene, Method method, const std::string& metric) {
        std::vector<double> out;
        for (const RunArtifacts& r : report.runs)
            if (r.scene == scene && r.method == method) out.push_back(metric_value(r.metrics, metric));
        return out;
    };
    for (const NamedScene& scene : scenes)
        for (const std::string& metric : compared_metrics())
            for (std::size_t i = 0; i < methods.size(); ++i)
                for (std::size_t j = i + 1; j < methods.size(); ++j) {
                    Comparison c{scene.name, metric, methods[i], methods[j], values(scene.name, methods[i], metric),
                                 values(scene.name, methods[j], metric), {}};
                    c.test = mann_whitney_u(c.values_a, c.values_b);
                    report.comparisons.push_back(std::move(c));
                }
    return report;
}

namespace {

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::string comparisons_csv(const CampaignReport& report) {
    std::string out = "scene,metric,method_a,method_b,n_a,n_b,mean_a,mean_b,u,p,exact\n";
    for (const Comparison& c : report.comparisons)
        out += c.scene + "," + c.metric + "," + method_name(c.a) + "," + method_name(c.b) + "," +
               std::to_string(c.values_a.size()) + "," + std::to_string(c.values_b.size()) + "," +
               format_number(mean(c.values_a)) + "," + format_number(mean(c.values_b)) + "," +
               format_number(c.test.u) + "," + format_number(c.test.p) + "," + (c.test.exact ? "1" : "0") + "\n";
    return out;
}

std::string campaign_summary(const CampaignReport& report) {
    std::string out;
    char buf[256];
    std::string current;
    for (const Comparison& c : report.comparisons) {
        const std::string block = c.scene + " / " + c.metric;
        if (block != current) {
            out += "[" + block + "]\n";
            current = block;
        }
        std::snprintf(buf, sizeof buf, "  %-6s mean %10.4f  vs  %-6s mean %10.4f   U = %g  p = %.4g%s\n",
                      method_name(c.a), mean(c.values_a), method_name(c.b), mean(c.values_b), c.test.u, c.test.p,
                      c.test.exact ? " (exact)" : "");
        out += buf;
    }
    if (report.comparisons.empty()) out += "no comparisons (need at least two seeds)\n";
    return out;
}

void write_campaign(const CampaignReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "runs");
    std::string metrics = metrics_header() + "\n";
    for (const RunArtifacts& r : report.runs) {
        metrics += metrics_row(r) + "\n";
        write_text(dir / "runs" / (r.stem() + ".trace.csv"), r.trace_csv);
        write_text(dir / "runs" / (r.stem() + ".xyz"), r.cloud_xyz);
    }
    write_text(dir / "metrics.csv", metrics);
    write_text(dir / "comparisons.csv", comparisons_csv(report));
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    auto parse = [&](std::string_view s) {
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw std::invalid_argument("invalid seed list '" + text + "'");
        return v;
    };
    std::vector<std::uint64_t> out;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const std::uint64_t lo = parse(std::string_view(text).substr(0, dots));
        const std::uint64_t hi = parse(std::string_view(text).substr(dots + 2));
        if (hi < lo) throw std::invalid_argument("invalid seed range '" + text + "'");
        for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
        return out;
    }
    std::string_view rest(text);
    while (true) {
        const auto comma = rest.find(',');
        out.push_back(parse(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

}  // namespace lrnbv

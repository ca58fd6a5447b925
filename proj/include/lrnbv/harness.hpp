#pragma once

#include "lrnbv/config.hpp"
#include "lrnbv/metrics.hpp"
#include "lrnbv/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrnbv {

enum class Method { LrNbv, Nbv, Heu };

const char* method_name(Method m);
/// Accepts "lrnbv", "nbv" and "heu"; throws std::invalid_argument otherwise.
Method parse_method(const std::string& name);

struct NamedScene {
    std::string name;
    Scene scene;
};

/// Scene file loaded and named after its `name` entry (file stem if absent).
NamedScene load_named_scene(const std::filesystem::path& path);

/// Outputs of one (scene, method, seed) run, already rendered to text.
struct RunArtifacts {
    std::string scene;
    Method method = Method::LrNbv;
    std::uint64_t seed = 0;
    ReconstructionResult result;
    MetricsRecord metrics;
    std::string trace_csv;
    std::string cloud_xyz;

    std::string stem() const;  ///< "<scene>_<method>_<seed>"
};

/// Header of the metrics CSV (no trailing newline).
std::string metrics_header();
std::string metrics_row(const RunArtifacts& run);

/// Runs one planner on one scene; `config.seed` is ignored in favor of `seed`.
/// Coverage is measured after every acquisition against the scene's surface samples.
RunArtifacts run_single(const NamedScene& scene, const RunConfig& config, Method method, std::uint64_t seed);

/// Writes <stem>.metrics.csv, <stem>.trace.csv and <stem>.xyz into `dir`.
void write_run(const RunArtifacts& run, const std::filesystem::path& dir);

struct Comparison {
    std::string scene;
    std::string metric;
    Method a;
    Method b;
    std::vector<double> values_a;
    std::vector<double> values_b;
    MannWhitneyResult test;
};

struct CampaignReport {
    std::vector<RunArtifacts> runs;  ///< ordered by scene, method, seed
    std::vector<Comparison> comparisons;
};

class CampaignError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Metric names compared by a campaign, in output order.
const std::vector<std::string>& compared_metrics();
double metric_value(const MetricsRecord& m, const std::string& metric);

/// Cross product of scenes, methods and seeds, then a Mann-Whitney test per
/// scene, metric and method pair (only with at least two seeds). A failing run
/// raises CampaignError naming its (scene, method, seed).
CampaignReport run_campaign(const std::vector<NamedScene>& scenes, const RunConfig& config,
                            const std::vector<Method>& methods, const std::vector<std::uint64_t>& seeds);

std::string comparisons_csv(const CampaignReport& report);
/// Human-readable summary: per-method means and the test results.
std::string campaign_summary(const CampaignReport& report);

/// Writes metrics.csv, comparisons.csv and every run's trace and point cloud.
void write_campaign(const CampaignReport& report, const std::filesystem::path& dir);

/// "N..M" (inclusive) or a comma list of seeds.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace lrnbv

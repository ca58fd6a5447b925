#pragma once

#include "lrnbv/geometry.hpp"
#include "lrnbv/occupancy_map.hpp"
#include "lrnbv/scene.hpp"
#include "lrnbv/segmentation.hpp"
#include "lrnbv/sensor.hpp"
#include "lrnbv/utility.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lrnbv {

struct PlannerConfig {
    int samples_per_iteration = 50;    ///< n, sampled poses per tree expansion
    int max_iterations = 300;          ///< hard cap on acquisitions after the home scan
    int cache_capacity_initial = 50;   ///< m at iteration 0
    int cache_capacity_min = 5;        ///< floor of the linear shrink schedule
    double tau_factor = 0.25;          ///< admission threshold = tau_factor * best node utility
    std::optional<double> tau_fixed;   ///< overrides the relative rule when set
    double step_max = 0.15;            ///< max distance between a node and its parent
    double standoff_min = 0.15;        ///< min distance to the object centroid and above the table
    int orientation_candidates = 5;    ///< 1 (look-at only) or 5 (look-at, pitch +-, yaw +-)
    double orientation_perturbation_deg = 15.0;
    int max_sampling_attempts = 1000;
    int max_acquisitions_without_object = 10;

    void validate() const;
};

/// Cache capacity m_i = max(min, round(m_0 * (1 - i / max_iterations))).
int cache_capacity(int iteration, const PlannerConfig& config);

/// Everything a tree expansion reads: the utility snapshot, weights and the
/// sampling domain.
struct PlanningContext {
    const UtilityContext& utility;
    GainWeights weights;
    Aabb workspace;
    double table_height = 0.0;

    const ObjectEstimate* object() const { return utility.object(); }
    double evaluate(const SensorPose& pose) const { return lrnbv::utility(pose, utility, weights); }
};

class SamplingFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TreeNode {
    SensorPose pose;
    int parent = -1;
    double utility = 0.0;
    double branch_sum = 0.0;  ///< utility summed from the root down to this node
    int depth = 0;
};

class PlannerTree {
public:
    int add_root(const SensorPose& pose, double utility);
    int add_child(int parent, const SensorPose& pose, double utility);

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(int index) const { return nodes_[index]; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    bool is_leaf(int index) const { return child_count_[index] == 0; }
    /// Index of the node closest in position; ties go to the oldest node.
    int nearest(const Vec3& position) const;

private:
    std::vector<TreeNode> nodes_;
    std::vector<int> child_count_;
};

/// Root-to-leaf path (node indices) with the largest summed utility. Ties prefer
/// the shorter path, then the leaf created first.
std::vector<int> best_branch(const PlannerTree& tree);

struct CacheEntry {
    SensorPose pose;
    double utility = 0.0;
};

/// Promising poses kept across iterations, sorted by utility (descending).
class NodeCache {
public:
    explicit NodeCache(int capacity = 50) : capacity_(capacity) {}

    const std::vector<CacheEntry>& entries() const { return entries_; }
    int capacity() const { return capacity_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    /// Merges new entries (stable by utility) and truncates to capacity.
    void append(const std::vector<CacheEntry>& entries);
    void set_capacity(int capacity);
    /// Drops entries whose pose equals `pose` exactly.
    void remove(const SensorPose& pose);

    double best_utility() const;   ///< -inf when empty
    double worst_utility() const;  ///< -inf when empty

private:
    void sort_and_truncate();

    std::vector<CacheEntry> entries_;
    int capacity_;
};

struct Expansion {
    PlannerTree tree;
    std::vector<CacheEntry> cached;  ///< off-branch nodes above the admission threshold
    double tau = 0.0;
};

/// Pose candidates at `position`: look-at toward `target`, then pitch +/-, yaw +/-.
std::vector<Quat> orientation_candidates(const Vec3& position, const Vec3& target,
                                         const PlannerConfig& config);

/// Look-at target: ROI center, or the workspace center before an object exists.
Vec3 view_target(const PlanningContext& ctx);

/// Collision and standoff constraints for a sensor position.
bool admissible(const Vec3& position, const PlanningContext& ctx, const PlannerConfig& config);

/// Best orientation at a fixed position (first candidate wins ties).
CacheEntry orient(const Vec3& position, const PlanningContext& ctx, const PlannerConfig& config);

/// Uniform admissible position with its best orientation. Throws
/// SamplingFailure after max_sampling_attempts rejections.
SensorPose sample_pose(const PlanningContext& ctx, const PlannerConfig& config, Rng& rng);

Expansion expand_rrt(const SensorPose& root, const PlannerConfig& config, const PlanningContext& ctx,
                     Rng& rng);

/// Tree rooted at the best cached pose with the other cached poses attached
/// before sampling. Throws std::invalid_argument on an empty cache.
Expansion expand_rrt_cached(const NodeCache& cache, const PlannerConfig& config,
                            const PlanningContext& ctx, Rng& rng);

/// Re-evaluates, re-sorts and truncates the cache to the capacity of `iteration`.
/// Entries whose new utility is not above `floor` are dropped.
NodeCache update_cached_nodes(const NodeCache& cache, const PlanningContext& ctx, int iteration,
                              const PlannerConfig& config,
                              double floor = -std::numeric_limits<double>::infinity());

/// Every knob of a reconstruction run.
struct ReconstructionConfig {
    double map_resolution = 0.01;
    OccupancyParams occupancy;
    SegmentationParams segmentation;
    UtilityParams utility;
    GainWeights weights;
    double visited_cell_size = 0.18;
    PlannerConfig planner;
    SensorModel sensor;

    void validate() const;
};

enum class Termination { Converged, IterationCap, NoObject };
const char* to_string(Termination t);

struct IterationRecord {
    int iteration = 0;  ///< 0 is the home acquisition
    SensorPose executed;
    double u_best = std::numeric_limits<double>::quiet_NaN();
    double u_best_cached = std::numeric_limits<double>::quiet_NaN();
    double u_worst_cached = std::numeric_limits<double>::quiet_NaN();
    std::size_t cache_size = 0;
    bool from_cache = false;
    std::size_t object_points = 0;
    Vec3 roi_dims = Vec3::Zero();
};

struct ReconstructionResult {
    std::optional<ObjectEstimate> object;
    std::vector<SensorPose> executed;  ///< includes the home acquisition
    std::vector<IterationRecord> trace;
    Termination termination = Termination::Converged;
    bool object_missing() const { return !object.has_value(); }
};

/// Called after every acquisition with the updated map and object.
using AcquisitionObserver =
    std::function<void(const IterationRecord&, const VoxelMap&, const std::optional<ObjectEstimate>&)>;

/// Decision of one planning iteration, kept for inspection.
struct PlanStep {
    Expansion expansion;      ///< tree the executed pose came from
    std::vector<int> branch;  ///< its best branch
    double u_best = std::numeric_limits<double>::quiet_NaN();  ///< best non-root utility of the fresh tree
    bool from_cache = false;
    std::optional<SensorPose> next;  ///< empty when the iteration terminated
};

/// The receding-horizon loop, one iteration per step(). The constructor takes
/// the home scan. Each step expands a tree from the current pose, stops when
/// its best candidate does not beat the worst cached node, re-expands from the
/// cache when the best cached node is better, and acquires at the first
/// non-root pose of the chosen best branch.
class ReconstructionSession {
public:
    ReconstructionSession(const Scene& scene, const ReconstructionConfig& config, std::uint64_t seed,
                          AcquisitionObserver observer = {});

    /// Runs one iteration; false once the loop has terminated.
    bool step();
    bool finished() const { return finished_; }

    const VoxelMap& map() const { return map_; }
    const std::optional<ObjectEstimate>& object() const { return result_.object; }
    const VisitedGrid& visited() const { return visited_; }
    const NodeCache& cache() const { return cache_; }
    const SensorPose& current() const { return current_; }
    int iteration() const { return iteration_; }
    double best_cached() const { return best_cached_; }
    double worst_cached() const { return worst_cached_; }
    const std::optional<PlanStep>& last_plan() const { return last_plan_; }
    const ReconstructionResult& result() const { return result_; }
    const ReconstructionConfig& config() const { return config_; }

    /// Utility snapshot of the current map, object and visited cells.
    UtilityContext utility_context() const;
    PlanningContext planning_context(const UtilityContext& uctx) const;

private:
    void acquire(const SensorPose& pose, IterationRecord& record);
    void publish(const IterationRecord& record);
    bool finish(Termination reason);

    Scene scene_;
    ReconstructionConfig config_;
    std::uint64_t seed_;
    AcquisitionObserver observer_;
    VoxelMap map_;
    VisitedGrid visited_;
    NodeCache cache_;
    Rng rng_;
    SensorPose current_;
    ReconstructionResult result_;
    std::optional<PlanStep> last_plan_;
    double best_cached_ = -std::numeric_limits<double>::infinity();
    double worst_cached_ = -std::numeric_limits<double>::infinity();
    int iteration_ = 0;
    bool finished_ = false;
};

/// Runs a session to termination.
ReconstructionResult run(const Scene& scene, const ReconstructionConfig& config, std::uint64_t seed,
                         const AcquisitionObserver& observer = {});

/// Seed for the sensor noise of the n-th acquisition of a run.
std::uint64_t scan_seed(std::uint64_t run_seed, std::size_t acquisition);

}  // namespace lrnbv

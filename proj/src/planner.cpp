#include "lrnbv/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lrnbv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool same_pose(const SensorPose& a, const SensorPose& b) {
    return a.position == b.position && a.orientation.coeffs() == b.orientation.coeffs();
}

Vec3 steer(const Vec3& from, const Vec3& to, double step_max) {
    const Vec3 delta = to - from;
    const double dist = delta.norm();
    if (dist <= step_max) return to;
    return from + delta * (step_max / dist);
}

/// Samples `count` nodes into `tree`, each attached to its nearest node.
void grow(PlannerTree& tree, int count, const PlannerConfig& config, const PlanningContext& ctx,
          Rng& rng) {
    for (int s = 0; s < count; ++s) {
        bool placed = false;
        for (int attempt = 0; attempt < config.max_sampling_attempts && !placed; ++attempt) {
            const Vec3 raw(rng.uniform(ctx.workspace.min.x(), ctx.workspace.max.x()),
                           rng.uniform(ctx.workspace.min.y(), ctx.workspace.max.y()),
                           rng.uniform(ctx.workspace.min.z(), ctx.workspace.max.z()));
            const int parent = tree.nearest(raw);
            const Vec3 position = steer(tree.node(parent).pose.position, raw, config.step_max);
            if (!admissible(position, ctx, config)) continue;
            const CacheEntry oriented = orient(position, ctx, config);
            tree.add_child(parent, oriented.pose, oriented.utility);
            placed = true;
        }
        if (!placed) throw SamplingFailure("no admissible pose found; workspace saturated");
    }
}

/// Off-branch nodes from index `first` on whose utility exceeds tau.
Expansion collect(PlannerTree tree, int first, const PlannerConfig& config) {
    Expansion out;
    const std::vector<int> branch = best_branch(tree);
    std::vector<bool> on_branch(tree.size(), false);
    for (int i : branch) on_branch[i] = true;
    double best = kNegInf;
    for (const TreeNode& node : tree.nodes()) best = std::max(best, node.utility);
    out.tau = config.tau_fixed ? *config.tau_fixed : config.tau_factor * best;
    for (int i = first; i < static_cast<int>(tree.size()); ++i)
        if (!on_branch[i] && tree.node(i).utility > out.tau)
            out.cached.push_back({tree.node(i).pose, tree.node(i).utility});
    out.tree = std::move(tree);
    return out;
}

}  // namespace

void PlannerConfig::validate() const {
    if (samples_per_iteration < 0) throw std::invalid_argument("sample_per_iteration must be >= 0");
    if (max_iterations < 1) throw std::invalid_argument("num_iterations must be >= 1");
    if (cache_capacity_initial < 1) throw std::invalid_argument("num_cached_nodes must be >= 1");
    if (cache_capacity_min < 1 || cache_capacity_min > cache_capacity_initial)
        throw std::invalid_argument("cache_capacity_min must lie in [1, num_cached_nodes]");
    if (!std::isfinite(tau_factor)) throw std::invalid_argument("tau_factor must be finite");
    if (tau_fixed && std::isnan(*tau_fixed)) throw std::invalid_argument("tau must not be NaN");
    if (!(step_max > 0.0)) throw std::invalid_argument("step_max must be positive");
    if (!(standoff_min >= 0.0)) throw std::invalid_argument("standoff_min must be >= 0");
    if (orientation_candidates != 1 && orientation_candidates != 5)
        throw std::invalid_argument("orientation_candidates must be 1 or 5");
    if (max_sampling_attempts < 1) throw std::invalid_argument("max_sampling_attempts must be >= 1");
    if (max_acquisitions_without_object < 1)
        throw std::invalid_argument("max_acquisitions_without_object must be >= 1");
}

int cache_capacity(int iteration, const PlannerConfig& config) {
    const double fraction = 1.0 - static_cast<double>(iteration) / config.max_iterations;
    const int shrunk = static_cast<int>(std::lround(config.cache_capacity_initial * fraction));
    return std::max(config.cache_capacity_min, shrunk);
}

int PlannerTree::add_root(const SensorPose& pose, double utility) {
    nodes_.clear();
    child_count_.clear();
    nodes_.push_back({pose, -1, utility, utility, 0});
    child_count_.push_back(0);
    return 0;
}

int PlannerTree::add_child(int parent, const SensorPose& pose, double utility) {
    const TreeNode& p = nodes_.at(parent);
    nodes_.push_back({pose, parent, utility, p.branch_sum + utility, p.depth + 1});
    child_count_.push_back(0);
    ++child_count_[parent];
    return static_cast<int>(nodes_.size()) - 1;
}

int PlannerTree::nearest(const Vec3& position) const {
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
        const double d2 = (nodes_[i].pose.position - position).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

std::vector<int> best_branch(const PlannerTree& tree) {
    if (tree.empty()) throw std::invalid_argument("best_branch needs a non-empty tree");
    int leaf = -1;
    for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
        if (!tree.is_leaf(i)) continue;
        if (leaf < 0) {
            leaf = i;
            continue;
        }
        const TreeNode& a = tree.node(i);
        const TreeNode& b = tree.node(leaf);
        if (a.branch_sum > b.branch_sum || (a.branch_sum == b.branch_sum && a.depth < b.depth)) leaf = i;
    }
    std::vector<int> path;
    for (int i = leaf; i >= 0; i = tree.node(i).parent) path.push_back(i);
    std::reverse(path.begin(), path.end());
    return path;
}

void NodeCache::sort_and_truncate() {
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const CacheEntry& a, const CacheEntry& b) { return a.utility > b.utility; });
    if (static_cast<int>(entries_.size()) > capacity_) entries_.resize(capacity_);
}

void NodeCache::append(const std::vector<CacheEntry>& entries) {
    entries_.insert(entries_.end(), entries.begin(), entries.end());
    sort_and_truncate();
}

void NodeCache::set_capacity(int capacity) {
    capacity_ = capacity;
    sort_and_truncate();
}

void NodeCache::remove(const SensorPose& pose) {
    std::erase_if(entries_, [&](const CacheEntry& e) { return same_pose(e.pose, pose); });
}

double NodeCache::best_utility() const { return entries_.empty() ? kNegInf : entries_.front().utility; }
double NodeCache::worst_utility() const { return entries_.empty() ? kNegInf : entries_.back().utility; }

std::vector<Quat> orientation_candidates(const Vec3& position, const Vec3& target,
                                         const PlannerConfig& config) {
    const Quat base = look_at(position, target);
    std::vector<Quat> out{base};
    if (config.orientation_candidates == 1) return out;
    const double angle = config.orientation_perturbation_deg * std::numbers::pi / 180.0;
    for (const Vec3& axis : {Vec3(Vec3::UnitX()), Vec3(Vec3::UnitY())})
        for (double sign : {1.0, -1.0})
            out.push_back((base * Quat(Eigen::AngleAxisd(sign * angle, axis))).normalized());
    return out;
}

Vec3 view_target(const PlanningContext& ctx) {
    if (const ObjectEstimate* object = ctx.object()) return object->roi.center();
    return ctx.workspace.center();
}

bool admissible(const Vec3& position, const PlanningContext& ctx, const PlannerConfig& config) {
    if (!ctx.workspace.contains(position)) return false;
    if (position.z() < ctx.table_height + config.standoff_min) return false;
    if (const ObjectEstimate* object = ctx.object()) {
        if (object->inflated_roi.contains(position)) return false;
        if ((position - object->centroid).norm() < config.standoff_min) return false;
    }
    return true;
}

CacheEntry orient(const Vec3& position, const PlanningContext& ctx, const PlannerConfig& config) {
    CacheEntry best{{position, Quat::Identity()}, kNegInf};
    bool first = true;
    for (const Quat& q : orientation_candidates(position, view_target(ctx), config)) {
        const SensorPose pose{position, q};
        const double u = ctx.evaluate(pose);
        if (first || u > best.utility) best = {pose, u};
        first = false;
    }
    return best;
}

SensorPose sample_pose(const PlanningContext& ctx, const PlannerConfig& config, Rng& rng) {
    for (int attempt = 0; attempt < config.max_sampling_attempts; ++attempt) {
        const Vec3 p(rng.uniform(ctx.workspace.min.x(), ctx.workspace.max.x()),
                     rng.uniform(ctx.workspace.min.y(), ctx.workspace.max.y()),
                     rng.uniform(ctx.workspace.min.z(), ctx.workspace.max.z()));
        if (admissible(p, ctx, config)) return orient(p, ctx, config).pose;
    }
    throw SamplingFailure("no admissible pose found; workspace saturated");
}

Expansion expand_rrt(const SensorPose& root, const PlannerConfig& config, const PlanningContext& ctx,
                     Rng& rng) {
    if (!ctx.workspace.contains(root.position)) throw std::invalid_argument("tree root lies outside the workspace");
    PlannerTree tree;
    tree.add_root(root, ctx.evaluate(root));
    grow(tree, config.samples_per_iteration, config, ctx, rng);
    return collect(std::move(tree), 1, config);
}

Expansion expand_rrt_cached(const NodeCache& cache, const PlannerConfig& config,
                            const PlanningContext& ctx, Rng& rng) {
    if (cache.empty()) throw std::invalid_argument("cached expansion needs a non-empty cache");
    const auto& entries = cache.entries();
    PlannerTree tree;
    tree.add_root(entries.front().pose, entries.front().utility);
    for (std::size_t e = 1; e < entries.size(); ++e)
        tree.add_child(tree.nearest(entries[e].pose.position), entries[e].pose, entries[e].utility);
    const int first_sampled = static_cast<int>(tree.size());
    grow(tree, config.samples_per_iteration, config, ctx, rng);
    return collect(std::move(tree), first_sampled, config);
}

NodeCache update_cached_nodes(const NodeCache& cache, const PlanningContext& ctx, int iteration,
                              const PlannerConfig& config, double floor) {
    std::vector<CacheEntry> refreshed;
    refreshed.reserve(cache.size());
    for (const CacheEntry& e : cache.entries()) {
        const double u = ctx.evaluate(e.pose);
        if (u > floor) refreshed.push_back({e.pose, u});
    }
    NodeCache out(std::max<int>(static_cast<int>(refreshed.size()), 1));
    out.append(refreshed);
    out.set_capacity(cache_capacity(iteration, config));
    return out;
}

void ReconstructionConfig::validate() const {
    if (!(map_resolution > 0.0)) throw std::invalid_argument("octomap_resolution must be positive");
    occupancy.validate();
    segmentation.dbscan.validate();
    if (!(segmentation.roi_margin >= 0.0)) throw std::invalid_argument("roi_margin must be >= 0");
    sensor.validate();
    utility.validate(sensor);
    weights.validate();
    if (!(visited_cell_size > 0.0)) throw std::invalid_argument("visited_cells_grid_size must be positive");
    planner.validate();
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::Converged: return "converged";
        case Termination::IterationCap: return "iteration_cap";
        case Termination::NoObject: return "no_object";
    }
    return "unknown";
}

std::uint64_t scan_seed(std::uint64_t run_seed, std::size_t acquisition) {
    // SplitMix64 finalizer over (seed, index)
    std::uint64_t z = run_seed * 0x9E3779B97F4A7C15ull + acquisition + 1;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

const ReconstructionConfig& validated(const ReconstructionConfig& config) {
    config.validate();
    return config;
}

}  // namespace

ReconstructionSession::ReconstructionSession(const Scene& scene, const ReconstructionConfig& config,
                                             std::uint64_t seed, AcquisitionObserver observer)
    : scene_(scene),
      config_(validated(config)),
      seed_(seed),
      observer_(std::move(observer)),
      map_(scene.workspace, config.map_resolution, config.occupancy),
      visited_(config.visited_cell_size, scene.workspace.min),
      cache_(config.planner.cache_capacity_initial),
      rng_(seed),
      current_(scene.home) {
    IterationRecord home;
    acquire(scene.home, home);
    publish(home);
}

void ReconstructionSession::acquire(const SensorPose& pose, IterationRecord& record) {
    const ScanFrame scan = render_scan(scene_, pose, config_.sensor, scan_seed(seed_, result_.executed.size()));
    integrate_scan(map_, scan);
    result_.object = extract_object(map_, scene_.workspace, scene_.table_height, config_.segmentation);
    visited_.mark(pose.position);
    result_.executed.push_back(pose);
    current_ = pose;
    record.executed = pose;
    record.object_points = result_.object ? result_.object->points.size() : 0;
    record.roi_dims = result_.object ? result_.object->roi.extent() : Vec3::Zero();
}

void ReconstructionSession::publish(const IterationRecord& record) {
    result_.trace.push_back(record);
    if (observer_) observer_(record, map_, result_.object);
}

UtilityContext ReconstructionSession::utility_context() const {
    return UtilityContext(map_, result_.object, visited_, config_.sensor, config_.utility);
}

PlanningContext ReconstructionSession::planning_context(const UtilityContext& uctx) const {
    return PlanningContext{uctx, config_.weights, scene_.workspace, scene_.table_height};
}

bool ReconstructionSession::step() {
    if (finished_) return false;
    const PlannerConfig& pc = config_.planner;
    if (iteration_ >= pc.max_iterations) return finish(Termination::IterationCap);
    if (!result_.object && static_cast<int>(result_.executed.size()) >= pc.max_acquisitions_without_object)
        return finish(Termination::NoObject);

    const UtilityContext uctx = utility_context();
    const PlanningContext ctx = planning_context(uctx);

    auto best_below_root = [](const PlannerTree& tree, const std::vector<int>& path) {
        double best = kNegInf;
        for (std::size_t i = 1; i < path.size(); ++i) best = std::max(best, tree.node(path[i]).utility);
        return best;
    };

    PlanStep plan;
    plan.expansion = expand_rrt(current_, pc, ctx, rng_);
    cache_.append(plan.expansion.cached);
    plan.branch = best_branch(plan.expansion.tree);
    plan.u_best = best_below_root(plan.expansion.tree, plan.branch);
    const double tau = plan.expansion.tau;
    if (!(plan.u_best > worst_cached_) || plan.branch.size() < 2) {
        last_plan_ = std::move(plan);
        return finish(Termination::Converged);
    }

    if (!cache_.empty() && plan.u_best < best_cached_) {
        Expansion cached = expand_rrt_cached(cache_, pc, ctx, rng_);
        cache_.append(cached.cached);
        std::vector<int> cached_branch = best_branch(cached.tree);
        if (cached_branch.size() >= 2) {
            plan.expansion = std::move(cached);
            plan.branch = std::move(cached_branch);
            plan.from_cache = true;
        }
    }
    plan.next = plan.expansion.tree.node(plan.branch[1]).pose;
    cache_.remove(*plan.next);

    IterationRecord record;
    record.iteration = iteration_ + 1;
    record.u_best = plan.u_best;
    record.from_cache = plan.from_cache;
    acquire(*plan.next, record);

    const UtilityContext updated = utility_context();
    cache_ = update_cached_nodes(cache_, planning_context(updated), iteration_, pc, tau);
    best_cached_ = cache_.best_utility();
    worst_cached_ = cache_.worst_utility();
    ++iteration_;

    record.u_best_cached = best_cached_;
    record.u_worst_cached = worst_cached_;
    record.cache_size = cache_.size();
    last_plan_ = std::move(plan);
    publish(record);
    return true;
}

bool ReconstructionSession::finish(Termination reason) {
    finished_ = true;
    result_.termination = reason;
    return false;
}

ReconstructionResult run(const Scene& scene, const ReconstructionConfig& config, std::uint64_t seed,
                         const AcquisitionObserver& observer) {
    ReconstructionSession session(scene, config, seed, observer);
    while (session.step()) {
    }
    return session.result();
}

}  // namespace lrnbv

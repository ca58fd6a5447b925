#include "lrnbv/utility.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lrnbv {

namespace {
std::atomic<std::uint64_t> evaluation_counter{0};
}

std::uint64_t utility_evaluations() { return evaluation_counter.load(std::memory_order_relaxed); }

void GainWeights::validate() const {
    for (double w : {exploration, density, quality, visited})
        if (!(std::isfinite(w) && w >= 0.0)) throw std::invalid_argument("gain weights must be finite and >= 0");
}

VisitedGrid::VisitedGrid(double cell_size, const Vec3& origin) : cell_size_(cell_size), origin_(origin) {
    if (!(cell_size > 0.0)) throw std::invalid_argument("visited cell size must be positive");
}

VoxelKey VisitedGrid::cell_of(const Vec3& p) const {
    const Vec3 q = (p - origin_) / cell_size_;
    return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
            static_cast<int>(std::floor(q.z()))};
}

void UtilityParams::validate(const SensorModel& model) const {
    if (!(density_radius > 0.0)) throw std::invalid_argument("density_radius must be positive");
    if (!(ray_range > 0.0 && ray_range <= model.max_range))
        throw std::invalid_argument("ray_range must lie in (0, max_range]");
    if (ray_samples < 2) throw std::invalid_argument("ray_samples must be >= 2");
}

ObjectIndex::ObjectIndex(const GridGeometry& map_grid, const std::vector<Vec3>& points, double query_radius)
    : map_grid_(&map_grid) {
    if (points.empty()) throw std::invalid_argument("object index needs points");
    VoxelKey lo = map_grid.raw_key(points.front());
    VoxelKey hi = lo;
    std::vector<VoxelKey> keys;
    keys.reserve(points.size());
    for (const Vec3& p : points) {
        const VoxelKey k = map_grid.raw_key(p);
        lo = {std::min(lo.i, k.i), std::min(lo.j, k.j), std::min(lo.k, k.k)};
        hi = {std::max(hi.i, k.i), std::max(hi.j, k.j), std::max(hi.k, k.k)};
        keys.push_back(k);
    }
    const int pad = static_cast<int>(std::ceil(query_radius / map_grid.resolution)) + 1;
    offset_ = {lo.i - pad, lo.j - pad, lo.k - pad};
    sub_.resolution = map_grid.resolution;
    sub_.dims = {hi.i - lo.i + 1 + 2 * pad, hi.j - lo.j + 1 + 2 * pad, hi.k - lo.k + 1 + 2 * pad};
    sub_.bounds.min = map_grid.cube(offset_).min;
    sub_.bounds.max = sub_.bounds.min + Vec3(sub_.dims[0], sub_.dims[1], sub_.dims[2]) * sub_.resolution;
    cells_.assign(sub_.cell_count(), 0);
    for (const VoxelKey& k : keys)
        cells_[sub_.linear({k.i - offset_.i, k.j - offset_.j, k.k - offset_.k})] = 1;
}

constexpr double kGrazing = 1e-12;

double ObjectIndex::first_hit(const Vec3& origin, const Vec3& dir, double t_max) const {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    const auto span = intersect_ray_box(origin, dir, sub_.bounds);
    if (!span) return kInf;
    const double t0 = std::max(span->t_enter, 0.0);
    const double t1 = std::min(span->t_exit, t_max);
    if (t0 > t1) return kInf;
    double hit = kInf;
    // Cells only grazed at an edge or corner do not block.
    walk_grid(sub_, origin, dir, t0, t1, [&](const VoxelKey& key, double t_in, double t_out) {
        if (t_out - t_in <= kGrazing || !occupied(key.i, key.j, key.k)) return true;
        hit = t_in;
        return false;
    });
    return hit;
}

int ObjectIndex::count_within(const Vec3& p, double radius) const {
    const VoxelKey lo = sub_.raw_key(p - Vec3::Constant(radius));
    const VoxelKey hi = sub_.raw_key(p + Vec3::Constant(radius));
    const double r2 = radius * radius;
    int count = 0;
    for (int k = std::max(lo.k, 0); k <= std::min(hi.k, sub_.dims[2] - 1); ++k)
        for (int j = std::max(lo.j, 0); j <= std::min(hi.j, sub_.dims[1] - 1); ++j)
            for (int i = std::max(lo.i, 0); i <= std::min(hi.i, sub_.dims[0] - 1); ++i) {
                if (!occupied(i, j, k)) continue;
                const Vec3 c = map_grid_->center({i + offset_.i, j + offset_.j, k + offset_.k});
                if ((c - p).squaredNorm() <= r2) ++count;
            }
    return count;
}

UtilityContext::UtilityContext(const VoxelMap& map, const std::optional<ObjectEstimate>& object,
                               const VisitedGrid& visited, const SensorModel& model,
                               const UtilityParams& params)
    : map_(&map),
      object_(object ? &*object : nullptr),
      visited_(&visited),
      model_(model),
      params_(params),
      sensor_rays_(ray_directions(model)) {
    model_.validate();
    params_.validate(model_);
    if (object_) index_.emplace(map.grid(), object_->points, params_.density_radius);
}

int ray_validity(const Vec3& origin, const Vec3& dir, double t, const UtilityContext& ctx) {
    const ObjectEstimate* object = ctx.object();
    if (!object) throw std::logic_error("ray validity needs an object estimate");
    const double t_max = ctx.params().ray_range;
    const double s = t * t_max;
    if (!object->roi.contains(origin + s * dir)) return 0;
    return s <= ctx.object_index()->first_hit(origin, dir, t_max) ? 1 : 0;
}

double quality_gain(const Vec3& position, const Vec3& object_centroid) {
    return 1.0 / (1.0 + (position - object_centroid).norm());
}

double visited_gain(const Vec3& position, const VisitedGrid& grid) {
    return grid.visited(position) ? -1.0 : 0.0;
}

Gains evaluate_gains(const SensorPose& pose, const UtilityContext& ctx) {
    evaluation_counter.fetch_add(1, std::memory_order_relaxed);
    Gains gains;
    const VoxelMap& map = ctx.map();
    const GridGeometry& grid = map.grid();
    const ObjectEstimate* object = ctx.object();
    const ObjectIndex* index = ctx.object_index();
    const double t_max = ctx.params().ray_range;
    const double radius = ctx.params().density_radius;
    const int samples = ctx.params().ray_samples;
    const Vec3& origin = pose.position;
    const Eigen::Matrix3d rot = pose.orientation.toRotationMatrix();

    std::vector<std::size_t> unknown;
    unknown.reserve(static_cast<std::size_t>(samples) * ctx.sensor_rays().size());
    auto note_unknown = [&](const Vec3& p) {
        if (const auto key = grid.key_of(p); key && map.state(*key) == VoxelState::Unknown)
            unknown.push_back(grid.linear(*key));
    };

    for (const Vec3& ray : ctx.sensor_rays()) {
        const Vec3 dir = rot * ray;
        if (!object) {
            for (int k = 0; k < samples; ++k) note_unknown(origin + (ctx.sample_t(k) * t_max) * dir);
            continue;
        }
        const auto span = intersect_ray_box(origin, dir, object->roi);
        if (!span || span->t_exit < 0.0 || span->t_enter > t_max) continue;
        double occlusion = std::numeric_limits<double>::quiet_NaN();
        for (int k = 0; k < samples; ++k) {
            const double s = ctx.sample_t(k) * t_max;
            const Vec3 p = origin + s * dir;
            if (!object->roi.contains(p)) continue;
            if (std::isnan(occlusion)) occlusion = index->first_hit(origin, dir, t_max);
            if (s > occlusion) continue;
            note_unknown(p);
            gains.density += 1.0 / (1.0 + index->count_within(p, radius));
        }
    }

    std::sort(unknown.begin(), unknown.end());
    const auto distinct = std::unique(unknown.begin(), unknown.end()) - unknown.begin();
    const double res = grid.resolution;
    gains.exploration = static_cast<double>(distinct) * res * res * res;
    if (object) gains.quality = quality_gain(origin, object->centroid);
    gains.visited = visited_gain(origin, ctx.visited());
    return gains;
}

double exploration_gain(const SensorPose& pose, const UtilityContext& ctx) {
    return evaluate_gains(pose, ctx).exploration;
}

double density_gain(const SensorPose& pose, const UtilityContext& ctx) {
    return evaluate_gains(pose, ctx).density;
}

double utility(const SensorPose& pose, const UtilityContext& ctx, const GainWeights& weights) {
    return evaluate_gains(pose, ctx).weighted(weights);
}

}  // namespace lrnbv

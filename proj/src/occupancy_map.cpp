#include "lrnbv/occupancy_map.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace lrnbv {

namespace {

void require_probability(double p, const char* name) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument(std::string(name) + " must lie in (0, 1)");
}

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

}  // namespace

void OccupancyParams::validate() const {
    require_probability(p_hit, "p_hit");
    require_probability(p_miss, "p_miss");
    require_probability(p_clamp_min, "p_clamp_min");
    require_probability(p_clamp_max, "p_clamp_max");
    require_probability(p_occupied, "p_occupied");
    require_probability(p_free, "p_free");
    if (!(p_clamp_min < p_clamp_max)) throw std::invalid_argument("p_clamp_min must be < p_clamp_max");
    if (!(p_free < p_occupied)) throw std::invalid_argument("p_free must be < p_occupied");
}

GridGeometry::GridGeometry(const Aabb& box, double res) : bounds(box), resolution(res) {
    if (!(res > 0.0)) throw std::invalid_argument("resolution must be positive");
    if (!box.non_degenerate()) throw std::invalid_argument("bounds must be non-degenerate");
    for (int a = 0; a < 3; ++a)
        dims[a] = std::max(1, static_cast<int>(std::ceil(box.extent()[a] / res - 1e-9)));
}

VoxelMap::VoxelMap(const Aabb& bounds, double resolution, const OccupancyParams& params)
    : grid_(bounds, resolution), params_(params) {
    params_.validate();
    clamp_min_ = logit(params_.p_clamp_min);
    clamp_max_ = logit(params_.p_clamp_max);
    occ_threshold_ = logit(params_.p_occupied);
    free_threshold_ = logit(params_.p_free);
    hit_delta_ = logit(params_.p_hit);
    miss_delta_ = logit(params_.p_miss);
    cells_.assign(grid_.cell_count(), kUnset);
}

std::optional<double> VoxelMap::log_odds(const VoxelKey& key) const {
    if (!grid_.in_grid(key)) return std::nullopt;
    const double v = cells_[grid_.linear(key)];
    if (std::isnan(v)) return std::nullopt;
    return v;
}

VoxelState VoxelMap::classify(double v) const {
    if (v >= occ_threshold_) return VoxelState::Occupied;
    if (v <= free_threshold_) return VoxelState::Free;
    return VoxelState::Unknown;
}

VoxelState VoxelMap::state(const VoxelKey& key) const {
    if (!grid_.in_grid(key)) return VoxelState::Unknown;
    const double v = cells_[grid_.linear(key)];
    if (std::isnan(v)) return VoxelState::Unknown;
    return classify(v);
}

void VoxelMap::update(const VoxelKey& key, double delta) {
    if (!grid_.in_grid(key)) return;
    double& v = cells_[grid_.linear(key)];
    if (std::isnan(v)) {
        v = 0.0;
        ++stored_;
    }
    v = std::clamp(v + delta, clamp_min_, clamp_max_);
}

std::vector<VoxelKey> traverse(const Vec3& origin, const Vec3& endpoint, const VoxelMap& map) {
    const Vec3 segment = endpoint - origin;
    const double length = segment.norm();
    if (length < map.resolution() * 1e-6) return {};
    const Vec3 dir = segment / length;
    const auto hit = intersect_ray_box(origin, dir, map.bounds());
    if (!hit) return {};
    const double t0 = std::max(hit->t_enter, 0.0);
    const double t1 = std::min(hit->t_exit, length);
    if (t0 > t1) return {};

    std::vector<VoxelKey> keys;
    walk_grid(map.grid(), origin, dir, t0, t1, [&](const VoxelKey& key, double, double) {
        keys.push_back(key);
        return true;
    });
    return keys;
}

void integrate_scan(VoxelMap& map, const ScanFrame& scan) {
    if (!map.bounds().contains(scan.pose.position))
        throw ScanRejected("scan pose lies outside the map bounds");

    const Vec3& origin = scan.pose.position;
    // Surface hits are pushed a hair past the surface so the hit voxel is the one
    // behind the surface regardless of which face the ray came through.
    const double nudge = map.resolution() * 1e-4;
    for (std::size_t p = 0; p < scan.depths.size(); ++p) {
        const Vec3& dir = scan.directions[p];
        const double depth = scan.depths[p];
        if (!ScanFrame::returned(depth)) {
            for (const VoxelKey& key : traverse(origin, origin + scan.max_range * dir, map))
                map.update(key, map.miss_delta());
            continue;
        }
        Vec3 end = origin + (depth + nudge) * dir;
        if (!map.bounds().contains(end)) end = origin + depth * dir;
        const std::vector<VoxelKey> keys = traverse(origin, end, map);
        if (!map.bounds().contains(end)) {
            for (const VoxelKey& key : keys) map.update(key, map.miss_delta());
            continue;
        }
        for (std::size_t k = 0; k + 1 < keys.size(); ++k) map.update(keys[k], map.miss_delta());
        if (!keys.empty()) map.update(keys.back(), map.hit_delta());
    }
}

VoxelState state_at(const VoxelMap& map, const Vec3& point) {
    const auto key = map.grid().key_of(point);
    return key ? map.state(*key) : VoxelState::Unknown;
}

std::vector<Vec3> occupied_centers(const VoxelMap& map, const Aabb& region) {
    std::vector<Vec3> out;
    const GridGeometry& grid = map.grid();
    const VoxelKey lo = grid.raw_key(region.min);
    const VoxelKey hi = grid.raw_key(region.max);
    const int i0 = std::max(lo.i, 0), j0 = std::max(lo.j, 0), k0 = std::max(lo.k, 0);
    const int i1 = std::min(hi.i, grid.dims[0] - 1);
    const int j1 = std::min(hi.j, grid.dims[1] - 1);
    const int k1 = std::min(hi.k, grid.dims[2] - 1);
    for (int k = k0; k <= k1; ++k)
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                const VoxelKey key{i, j, k};
                if (map.state(key) != VoxelState::Occupied) continue;
                const Vec3 c = grid.center(key);
                if (region.contains(c)) out.push_back(c);
            }
    return out;
}

void write_points(std::ostream& out, const std::vector<Vec3>& points) {
    char line[96];
    for (const Vec3& p : points) {
        std::snprintf(line, sizeof line, "%.6f %.6f %.6f\n", p.x(), p.y(), p.z());
        out << line;
    }
}

}  // namespace lrnbv

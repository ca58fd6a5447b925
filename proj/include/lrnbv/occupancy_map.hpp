#pragma once

#include "lrnbv/geometry.hpp"
#include "lrnbv/scan_frame.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lrnbv {

enum class VoxelState { Free, Occupied, Unknown };

struct VoxelKey {
    int i = 0;
    int j = 0;
    int k = 0;
    auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey& key) const noexcept {
        std::size_t h = static_cast<std::size_t>(key.i) * 73856093u;
        h ^= static_cast<std::size_t>(key.j) * 19349663u;
        h ^= static_cast<std::size_t>(key.k) * 83492791u;
        return h;
    }
};

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Sensor model and classification constants, all given as probabilities.
struct OccupancyParams {
    double p_hit = 0.7;
    double p_miss = 0.4;
    double p_clamp_min = 0.12;
    double p_clamp_max = 0.97;
    double p_occupied = 0.5;  ///< log-odds >= logit(p_occupied) classifies as occupied
    double p_free = 0.3;      ///< log-odds <= logit(p_free) classifies as free

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Regular grid over an axis-aligned box. Voxel (i, j, k) spans
/// [min + index * resolution, min + (index + 1) * resolution) per axis.
struct GridGeometry {
    Aabb bounds;
    double resolution = 0.0;
    std::array<int, 3> dims{};

    GridGeometry() = default;
    GridGeometry(const Aabb& box, double res);

    bool in_grid(const VoxelKey& key) const {
        return key.i >= 0 && key.j >= 0 && key.k >= 0 && key.i < dims[0] && key.j < dims[1] &&
               key.k < dims[2];
    }
    /// Unclamped floor index, valid or not.
    VoxelKey raw_key(const Vec3& p) const {
        return {static_cast<int>(std::floor((p.x() - bounds.min.x()) / resolution)),
                static_cast<int>(std::floor((p.y() - bounds.min.y()) / resolution)),
                static_cast<int>(std::floor((p.z() - bounds.min.z()) / resolution))};
    }
    std::optional<VoxelKey> key_of(const Vec3& p) const {
        if (!bounds.contains(p)) return std::nullopt;
        VoxelKey key = raw_key(p);
        // points on the max faces belong to the last voxel
        key.i = std::min(key.i, dims[0] - 1);
        key.j = std::min(key.j, dims[1] - 1);
        key.k = std::min(key.k, dims[2] - 1);
        return key;
    }
    Vec3 center(const VoxelKey& key) const {
        return bounds.min + Vec3(key.i + 0.5, key.j + 0.5, key.k + 0.5) * resolution;
    }
    Aabb cube(const VoxelKey& key) const {
        const Vec3 lo = bounds.min + Vec3(key.i, key.j, key.k) * resolution;
        return {lo, lo + Vec3::Constant(resolution)};
    }
    std::size_t linear(const VoxelKey& key) const {
        return (static_cast<std::size_t>(key.k) * dims[1] + key.j) * dims[0] + key.i;
    }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
};

/// Amanatides-Woo walk over `grid` along origin + t * dir for t in [t_begin, t_end].
/// The range must already lie inside the grid bounds. `visit(key, t_in, t_out)`
/// is called for each voxel in order; returning false stops the walk.
/// Consecutive keys differ by one unit in exactly one index.
template <typename Visit>
void walk_grid(const GridGeometry& grid, const Vec3& origin, const Vec3& dir, double t_begin,
               double t_end, Visit&& visit) {
    auto clamp_key = [&](VoxelKey key) {
        key.i = std::clamp(key.i, 0, grid.dims[0] - 1);
        key.j = std::clamp(key.j, 0, grid.dims[1] - 1);
        key.k = std::clamp(key.k, 0, grid.dims[2] - 1);
        return key;
    };
    VoxelKey key = clamp_key(grid.raw_key(origin + t_begin * dir));
    const VoxelKey last = clamp_key(grid.raw_key(origin + t_end * dir));

    std::array<int, 3> index{key.i, key.j, key.k};
    const std::array<int, 3> target{last.i, last.j, last.k};
    std::array<int, 3> step{};
    std::array<int, 3> remaining{};
    std::array<double, 3> t_next{};
    std::array<double, 3> t_delta{};
    int total = 0;
    for (int a = 0; a < 3; ++a) {
        step[a] = target[a] > index[a] ? 1 : (target[a] < index[a] ? -1 : (dir[a] >= 0.0 ? 1 : -1));
        remaining[a] = std::abs(target[a] - index[a]);
        total += remaining[a];
        if (dir[a] != 0.0) {
            const double boundary =
                grid.bounds.min[a] + (index[a] + (step[a] > 0 ? 1 : 0)) * grid.resolution;
            t_next[a] = (boundary - origin[a]) / dir[a];
            t_delta[a] = grid.resolution / std::abs(dir[a]);
        } else {
            t_next[a] = t_end;
            t_delta[a] = 0.0;
        }
    }

    double t_in = t_begin;
    for (;;) {
        int axis = -1;
        for (int a = 0; a < 3; ++a)
            if (remaining[a] > 0 && (axis < 0 || t_next[a] < t_next[axis])) axis = a;
        const double t_out =
            axis < 0 ? t_end : std::clamp(t_next[axis], t_in, t_end);
        if (!visit(VoxelKey{index[0], index[1], index[2]}, t_in, t_out) || total == 0) return;
        index[axis] += step[axis];
        --remaining[axis];
        --total;
        t_in = t_out;
        t_next[axis] += t_delta[axis];
    }
}

/// Probabilistic occupancy grid. Cells without a stored value are unknown.
/// Storage is dense (NaN marks "no stored value"); the workspace is small.
class VoxelMap {
public:
    VoxelMap(const Aabb& bounds, double resolution, const OccupancyParams& params = {});

    const GridGeometry& grid() const { return grid_; }
    const Aabb& bounds() const { return grid_.bounds; }
    double resolution() const { return grid_.resolution; }
    const OccupancyParams& params() const { return params_; }

    double clamp_min() const { return clamp_min_; }
    double clamp_max() const { return clamp_max_; }
    double occ_threshold() const { return occ_threshold_; }
    double free_threshold() const { return free_threshold_; }
    double hit_delta() const { return hit_delta_; }
    double miss_delta() const { return miss_delta_; }

    std::optional<double> log_odds(const VoxelKey& key) const;
    VoxelState classify(double log_odds) const;
    /// Unknown for keys outside the grid or without a stored value.
    VoxelState state(const VoxelKey& key) const;

    /// Adds `delta` to the cell's log-odds (0 if none stored), clamped.
    void update(const VoxelKey& key, double delta);

    std::size_t stored_count() const { return stored_; }

private:
    GridGeometry grid_;
    OccupancyParams params_;
    double clamp_min_;
    double clamp_max_;
    double occ_threshold_;
    double free_threshold_;
    double hit_delta_;
    double miss_delta_;
    std::vector<double> cells_;
    std::size_t stored_ = 0;
};

/// Voxels crossed by the segment, ordered from origin to endpoint. The segment is
/// clipped to the map bounds first; degenerate segments yield an empty list.
std::vector<VoxelKey> traverse(const Vec3& origin, const Vec3& endpoint, const VoxelMap& map);

class ScanRejected : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-ray log-odds update. Throws ScanRejected (map untouched) if the scan
/// pose lies outside the map bounds.
void integrate_scan(VoxelMap& map, const ScanFrame& scan);

/// Classification of the voxel containing `point`; unknown outside the bounds.
VoxelState state_at(const VoxelMap& map, const Vec3& point);

/// Centers of occupied voxels whose center lies in `region`, in linear key order.
std::vector<Vec3> occupied_centers(const VoxelMap& map, const Aabb& region);

/// One "x y z" line per point, meters, six decimals.
void write_points(std::ostream& out, const std::vector<Vec3>& points);

}  // namespace lrnbv

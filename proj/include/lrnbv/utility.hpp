#pragma once

#include "lrnbv/geometry.hpp"
#include "lrnbv/occupancy_map.hpp"
#include "lrnbv/segmentation.hpp"
#include "lrnbv/sensor.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

namespace lrnbv {

/// Weights of the four gains. Defaults are the experimental values
/// (exploration 500, density 0.05, quality 0.08, visited 500).
struct GainWeights {
    double exploration = 500.0;
    double density = 0.05;
    double quality = 0.08;
    double visited = 500.0;

    /// Weights must be finite and non-negative; zero switches a gain off.
    void validate() const;
    GainWeights scaled(double factor) const {
        return {exploration * factor, density * factor, quality * factor, visited * factor};
    }
};

/// Coarse binary grid over sensor positions already used for an acquisition.
class VisitedGrid {
public:
    explicit VisitedGrid(double cell_size = 0.18, const Vec3& origin = Vec3::Zero());

    void mark(const Vec3& position) { cells_.insert(cell_of(position)); }
    bool visited(const Vec3& position) const { return cells_.count(cell_of(position)) > 0; }
    std::size_t size() const { return cells_.size(); }
    double cell_size() const { return cell_size_; }

private:
    VoxelKey cell_of(const Vec3& p) const;

    double cell_size_;
    Vec3 origin_;
    std::set<VoxelKey> cells_;
};

struct UtilityParams {
    double density_radius = 0.02;  ///< r_d, neighborhood radius for point density
    double ray_range = 1.5;        ///< t_max, distance covered by the normalized ray parameter
    int ray_samples = 16;          ///< samples per ray, t_k = k / (ray_samples - 1)

    void validate(const SensorModel& model) const;
};

/// Object voxels rasterized onto a padded sub-grid aligned with the map grid,
/// for fast occlusion and neighborhood queries.
class ObjectIndex {
public:
    ObjectIndex(const GridGeometry& map_grid, const std::vector<Vec3>& points, double query_radius);

    /// Distance along the ray to the first object voxel cube, or +inf.
    double first_hit(const Vec3& origin, const Vec3& dir, double t_max) const;
    /// Object points within `radius` (<= query_radius) of p.
    int count_within(const Vec3& p, double radius) const;

private:
    bool occupied(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < sub_.dims[0] && j < sub_.dims[1] && k < sub_.dims[2] &&
               cells_[(static_cast<std::size_t>(k) * sub_.dims[1] + j) * sub_.dims[0] + i] != 0;
    }

    const GridGeometry* map_grid_;
    VoxelKey offset_;   ///< map key of sub-grid cell (0, 0, 0)
    GridGeometry sub_;
    std::vector<std::uint8_t> cells_;
};

/// Read-only snapshot the gains are evaluated against. Holds non-owning
/// pointers: the map, object and visited grid must not change while the
/// context is in use.
class UtilityContext {
public:
    UtilityContext(const VoxelMap& map, const std::optional<ObjectEstimate>& object,
                   const VisitedGrid& visited, const SensorModel& model, const UtilityParams& params);

    const VoxelMap& map() const { return *map_; }
    const ObjectEstimate* object() const { return object_; }
    const VisitedGrid& visited() const { return *visited_; }
    const SensorModel& model() const { return model_; }
    const UtilityParams& params() const { return params_; }
    const std::vector<Vec3>& sensor_rays() const { return sensor_rays_; }
    const ObjectIndex* object_index() const { return index_ ? &*index_ : nullptr; }

    /// Normalized sample parameters t_k in [0, 1].
    double sample_t(int k) const { return static_cast<double>(k) / (params_.ray_samples - 1); }

private:
    const VoxelMap* map_;
    const ObjectEstimate* object_;
    const VisitedGrid* visited_;
    SensorModel model_;
    UtilityParams params_;
    std::vector<Vec3> sensor_rays_;
    std::optional<ObjectIndex> index_;
};

struct Gains {
    double exploration = 0.0;
    double density = 0.0;
    double quality = 0.0;
    double visited = 0.0;

    double weighted(const GainWeights& w) const {
        return w.exploration * exploration + w.density * density + w.quality * quality +
               w.visited * visited;
    }
};

/// V(r, t): 1 when r(t * t_max) is inside the ROI and not behind the first
/// object voxel along the ray. Requires an object in the context.
int ray_validity(const Vec3& origin, const Vec3& dir, double t, const UtilityContext& ctx);

/// Unknown volume (m^3) seen through valid samples, each voxel counted once per
/// pose. Without an object the ROI clause is dropped.
double exploration_gain(const SensorPose& pose, const UtilityContext& ctx);
/// Sum of V / (1 + rho) over every ray sample; 0 without an object.
double density_gain(const SensorPose& pose, const UtilityContext& ctx);
double quality_gain(const Vec3& position, const Vec3& object_centroid);
/// -1 in a visited cell, 0 otherwise.
double visited_gain(const Vec3& position, const VisitedGrid& grid);

/// All four gains in one raycasting pass.
Gains evaluate_gains(const SensorPose& pose, const UtilityContext& ctx);
double utility(const SensorPose& pose, const UtilityContext& ctx, const GainWeights& weights);

/// Process-wide count of gain evaluations (all threads).
std::uint64_t utility_evaluations();

}  // namespace lrnbv

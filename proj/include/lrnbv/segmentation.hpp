#pragma once

#include "lrnbv/geometry.hpp"
#include "lrnbv/occupancy_map.hpp"

#include <optional>
#include <vector>

namespace lrnbv {

struct DbscanParams {
    double eps = 0.025;
    int min_pts = 4;

    void validate() const;
};

inline constexpr int kNoise = -1;

/// DBSCAN over `points`. A point is core when at least `min_pts` points
/// (itself included) lie within `eps`. Clusters are numbered 0, 1, ... in
/// discovery order (by point index); border points join the first cluster
/// that reaches them; everything else is kNoise.
std::vector<int> dbscan(const std::vector<Vec3>& points, const DbscanParams& params);

struct SegmentationParams {
    DbscanParams dbscan;
    double roi_margin = 0.10;  ///< inflation of the ROI used for collision checks
};

/// The clustered object: its points, tight bounds, mean and inflated bounds.
struct ObjectEstimate {
    std::vector<Vec3> points;
    Aabb roi;
    Vec3 centroid = Vec3::Zero();
    Aabb inflated_roi;
};

/// Builds the estimate from a non-empty point set.
ObjectEstimate make_object_estimate(std::vector<Vec3> points, double roi_margin);

/// Occupied voxel centers above table_height + one voxel, clustered; the
/// largest cluster wins (ties: centroid closest to the bounds center, then the
/// lexicographically smallest ROI minimum). Empty when no cluster exists.
std::optional<ObjectEstimate> extract_object(const VoxelMap& map, const Aabb& scene_bounds,
                                             double table_height, const SegmentationParams& params);

}  // namespace lrnbv

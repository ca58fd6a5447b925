#pragma once

#include "lrnbv/geometry.hpp"
#include "lrnbv/planner.hpp"
#include "lrnbv/scene.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace lrnbv {

/// Standard NBV: the same loop with density and visited gains switched off.
ReconstructionConfig nbv_baseline_config(const ReconstructionConfig& base);

struct EllipseParams {
    double semi_axis_a = 0.45;
    double semi_axis_b = 0.35;
    double height = 0.45;  ///< absolute z of the ellipse plane
};

inline constexpr int kHeuPoseCount = 13;

/// 13 poses at theta_j = 2*pi*j/13 on the ellipse centered (in x, y) on the
/// object position, each looking at the object. Pure function of its inputs.
std::vector<SensorPose> heu_poses(const Vec3& object_position, const EllipseParams& ellipse);

/// Executes the heuristic pose list, one scan each, and segments the result.
ReconstructionResult run_heu(const Scene& scene, const ReconstructionConfig& config,
                             const EllipseParams& ellipse, std::uint64_t seed,
                             const AcquisitionObserver& observer = {});

/// vol(a & b) / vol(a | b); 0 for disjoint boxes or a zero-volume union.
double iou(const Aabb& a, const Aabb& b);

/// Percentage of reference samples with a reconstructed point within `distance`.
double coverage(const std::vector<Vec3>& recon, const std::vector<Vec3>& reference, double distance);

/// Acquisitions (after the first) whose coverage did not increase.
int useless_pose_count(const std::vector<double>& coverage_series);

struct MannWhitneyResult {
    double u = 0.0;  ///< statistic of the first sample
    double p = 1.0;  ///< two-sided
    bool exact = false;
};

/// Rank-sum test with midranks. Exact permutation distribution when both
/// samples have at most 8 values, otherwise the normal approximation with
/// tie and continuity correction.
MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

struct MetricsRecord {
    std::array<double, 3> est_dims{};  ///< ROI edges sorted descending (length, width, height)
    double iou = 0.0;
    int pose_count = 0;
    double coverage_pct = 0.0;
    int useless_poses = 0;
    std::vector<double> coverage_series;
};

/// Edges of the box sorted descending.
std::array<double, 3> sorted_dims(const Aabb& box);

MetricsRecord summarize(const ReconstructionResult& result, const Scene& scene,
                        const std::vector<double>& coverage_series);

}  // namespace lrnbv

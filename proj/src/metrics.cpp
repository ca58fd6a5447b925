#include "lrnbv/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace lrnbv {

ReconstructionConfig nbv_baseline_config(const ReconstructionConfig& base) {
    ReconstructionConfig out = base;
    out.weights.density = 0.0;
    out.weights.visited = 0.0;
    return out;
}

std::vector<SensorPose> heu_poses(const Vec3& object_position, const EllipseParams& ellipse) {
    if (!(ellipse.semi_axis_a > 0.0 && ellipse.semi_axis_b > 0.0))
        throw std::invalid_argument("ellipse semi-axes must be positive");
    std::vector<SensorPose> poses;
    poses.reserve(kHeuPoseCount);
    for (int j = 0; j < kHeuPoseCount; ++j) {
        const double theta = 2.0 * std::numbers::pi * j / kHeuPoseCount;
        const Vec3 position(object_position.x() + ellipse.semi_axis_a * std::cos(theta),
                            object_position.y() + ellipse.semi_axis_b * std::sin(theta), ellipse.height);
        poses.push_back({position, look_at(position, object_position)});
    }
    return poses;
}

ReconstructionResult run_heu(const Scene& scene, const ReconstructionConfig& config,
                             const EllipseParams& ellipse, std::uint64_t seed,
                             const AcquisitionObserver& observer) {
    config.validate();
    VoxelMap map(scene.workspace, config.map_resolution, config.occupancy);
    ReconstructionResult result;
    int index = 0;
    for (const SensorPose& pose : heu_poses(scene.object.bounds().center(), ellipse)) {
        const ScanFrame scan = render_scan(scene, pose, config.sensor, scan_seed(seed, result.executed.size()));
        integrate_scan(map, scan);
        result.object = extract_object(map, scene.workspace, scene.table_height, config.segmentation);
        result.executed.push_back(pose);
        IterationRecord record;
        record.iteration = index++;
        record.executed = pose;
        record.object_points = result.object ? result.object->points.size() : 0;
        record.roi_dims = result.object ? result.object->roi.extent() : Vec3::Zero();
        result.trace.push_back(record);
        if (observer) observer(record, map, result.object);
    }
    result.termination = Termination::Converged;
    return result;
}

double iou(const Aabb& a, const Aabb& b) {
    const Vec3 lo = a.min.cwiseMax(b.min);
    const Vec3 hi = a.max.cwiseMin(b.max);
    const Vec3 overlap = (hi - lo).cwiseMax(0.0);
    const double inter = overlap.x() * overlap.y() * overlap.z();
    const double uni = a.volume() + b.volume() - inter;
    if (!(uni > 0.0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double coverage(const std::vector<Vec3>& recon, const std::vector<Vec3>& reference, double distance) {
    if (reference.empty()) throw std::invalid_argument("coverage needs reference samples");
    if (recon.empty()) return 0.0;
    auto cell = [distance](const Vec3& p) {
        return VoxelKey{static_cast<int>(std::floor(p.x() / distance)),
                        static_cast<int>(std::floor(p.y() / distance)),
                        static_cast<int>(std::floor(p.z() / distance))};
    };
    std::unordered_map<VoxelKey, std::vector<int>, VoxelKeyHash> grid;
    for (int i = 0; i < static_cast<int>(recon.size()); ++i) grid[cell(recon[i])].push_back(i);
    const double d2 = distance * distance;
    std::size_t covered = 0;
    for (const Vec3& s : reference) {
        const VoxelKey c = cell(s);
        bool hit = false;
        for (int dk = -1; dk <= 1 && !hit; ++dk)
            for (int dj = -1; dj <= 1 && !hit; ++dj)
                for (int di = -1; di <= 1 && !hit; ++di) {
                    const auto it = grid.find({c.i + di, c.j + dj, c.k + dk});
                    if (it == grid.end()) continue;
                    for (int q : it->second)
                        if ((recon[q] - s).squaredNorm() <= d2) {
                            hit = true;
                            break;
                        }
                }
        if (hit) ++covered;
    }
    return 100.0 * static_cast<double>(covered) / static_cast<double>(reference.size());
}

int useless_pose_count(const std::vector<double>& coverage_series) {
    if (coverage_series.empty()) throw std::invalid_argument("coverage series must be non-empty");
    int count = 0;
    for (std::size_t j = 1; j < coverage_series.size(); ++j)
        if (coverage_series[j] <= coverage_series[j - 1]) ++count;
    return count;
}

MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("Mann-Whitney needs two non-empty samples");
    const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });

    std::vector<double> ranks(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = midrank;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }

    const double offset = static_cast<double>(n1) * (n1 + 1) / 2.0;
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n1; ++i) rank_sum += ranks[i];
    MannWhitneyResult out;
    out.u = rank_sum - offset;
    const double mean = static_cast<double>(n1) * n2 / 2.0;
    const double observed = std::abs(out.u - mean);

    if (n1 <= 8 && n2 <= 8) {
        // every assignment of n1 pooled ranks to the first sample
        out.exact = true;
        std::uint64_t extreme = 0, total = 0;
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            if (static_cast<std::size_t>(std::popcount(mask)) != n1) continue;
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i)) sum += ranks[i];
            ++total;
            if (std::abs(sum - offset - mean) >= observed - 1e-9) ++extreme;
        }
        out.p = static_cast<double>(extreme) / static_cast<double>(total);
        return out;
    }

    const double nn = static_cast<double>(n);
    const double variance = static_cast<double>(n1) * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (!(variance > 0.0)) {
        out.p = 1.0;
        return out;
    }
    const double z = std::max(0.0, (observed - 0.5) / std::sqrt(variance));
    out.p = std::min(1.0, std::erfc(z / std::numbers::sqrt2));
    return out;
}

std::array<double, 3> sorted_dims(const Aabb& box) {
    std::array<double, 3> d{box.extent().x(), box.extent().y(), box.extent().z()};
    std::sort(d.begin(), d.end(), std::greater<>());
    return d;
}

MetricsRecord summarize(const ReconstructionResult& result, const Scene& scene,
                        const std::vector<double>& coverage_series) {
    MetricsRecord m;
    if (result.object) {
        m.est_dims = sorted_dims(result.object->roi);
        m.iou = iou(result.object->roi, scene.object.bounds());
    }
    m.pose_count = static_cast<int>(result.executed.size());
    m.coverage_series = coverage_series;
    m.coverage_pct = coverage_series.empty() ? 0.0 : coverage_series.back();
    m.useless_poses = coverage_series.empty() ? 0 : useless_pose_count(coverage_series);
    return m;
}

}  // namespace lrnbv

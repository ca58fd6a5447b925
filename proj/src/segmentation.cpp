#include "lrnbv/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <unordered_map>

namespace lrnbv {

namespace {

constexpr int kUnvisited = -2;

/// Uniform hash grid with cell edge eps; a radius query inspects 27 cells.
class NeighborGrid {
public:
    NeighborGrid(const std::vector<Vec3>& points, double eps) : points_(points), eps_(eps) {
        for (int i = 0; i < static_cast<int>(points.size()); ++i) cells_[cell_of(points[i])].push_back(i);
    }

    void query(int index, std::vector<int>& out) const {
        out.clear();
        const Vec3& p = points_[index];
        const VoxelKey c = cell_of(p);
        const double eps2 = eps_ * eps_;
        for (int dk = -1; dk <= 1; ++dk)
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    const auto it = cells_.find({c.i + di, c.j + dj, c.k + dk});
                    if (it == cells_.end()) continue;
                    for (int q : it->second)
                        if ((points_[q] - p).squaredNorm() <= eps2) out.push_back(q);
                }
    }

private:
    VoxelKey cell_of(const Vec3& p) const {
        return {static_cast<int>(std::floor(p.x() / eps_)), static_cast<int>(std::floor(p.y() / eps_)),
                static_cast<int>(std::floor(p.z() / eps_))};
    }

    const std::vector<Vec3>& points_;
    double eps_;
    std::unordered_map<VoxelKey, std::vector<int>, VoxelKeyHash> cells_;
};

}  // namespace

void DbscanParams::validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("dbscan eps must be positive");
    if (min_pts < 1) throw std::invalid_argument("dbscan min_pts must be >= 1");
}

std::vector<int> dbscan(const std::vector<Vec3>& points, const DbscanParams& params) {
    params.validate();
    const int n = static_cast<int>(points.size());
    std::vector<int> labels(n, kUnvisited);
    const NeighborGrid grid(points, params.eps);
    std::vector<int> neighbors;
    std::deque<int> frontier;
    int cluster = 0;

    for (int i = 0; i < n; ++i) {
        if (labels[i] != kUnvisited) continue;
        grid.query(i, neighbors);
        if (static_cast<int>(neighbors.size()) < params.min_pts) {
            labels[i] = kNoise;
            continue;
        }
        labels[i] = cluster;
        frontier.assign(neighbors.begin(), neighbors.end());
        while (!frontier.empty()) {
            const int q = frontier.front();
            frontier.pop_front();
            if (labels[q] == kNoise) labels[q] = cluster;
            if (labels[q] != kUnvisited) continue;
            labels[q] = cluster;
            grid.query(q, neighbors);
            if (static_cast<int>(neighbors.size()) >= params.min_pts)
                frontier.insert(frontier.end(), neighbors.begin(), neighbors.end());
        }
        ++cluster;
    }
    return labels;
}

ObjectEstimate make_object_estimate(std::vector<Vec3> points, double roi_margin) {
    if (points.empty()) throw std::invalid_argument("object estimate needs at least one point");
    ObjectEstimate est;
    est.roi = {points.front(), points.front()};
    Vec3 sum = Vec3::Zero();
    for (const Vec3& p : points) {
        est.roi.expand(p);
        sum += p;
    }
    est.centroid = sum / static_cast<double>(points.size());
    est.inflated_roi = est.roi.inflated(roi_margin);
    est.points = std::move(points);
    return est;
}

std::optional<ObjectEstimate> extract_object(const VoxelMap& map, const Aabb& scene_bounds,
                                             double table_height, const SegmentationParams& params) {
    std::vector<Vec3> candidates;
    for (const Vec3& c : occupied_centers(map, scene_bounds))
        if (c.z() > table_height + map.resolution()) candidates.push_back(c);

    const std::vector<int> labels = dbscan(candidates, params.dbscan);
    const int clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    if (clusters <= 0) return std::nullopt;

    std::vector<std::vector<Vec3>> groups(clusters);
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != kNoise) groups[labels[i]].push_back(candidates[i]);

    const Vec3 center = scene_bounds.center();
    std::optional<ObjectEstimate> best;
    double best_dist = 0.0;
    for (auto& group : groups) {
        ObjectEstimate est = make_object_estimate(std::move(group), params.roi_margin);
        const double dist = (est.centroid - center).norm();
        bool better = !best;
        if (best) {
            const auto n = est.points.size(), m = best->points.size();
            if (n != m) {
                better = n > m;
            } else if (dist != best_dist) {
                better = dist < best_dist;
            } else {
                better = std::lexicographical_compare(est.roi.min.begin(), est.roi.min.end(),
                                                      best->roi.min.begin(), best->roi.min.end());
            }
        }
        if (better) {
            best = std::move(est);
            best_dist = dist;
        }
    }
    return best;
}

}  // namespace lrnbv

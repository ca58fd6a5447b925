#include "lrnbv/sensor.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace lrnbv {

void SensorModel::validate() const {
    if (!(fov_h_deg > 0.0 && fov_h_deg <= 180.0)) throw std::invalid_argument("fov_h must lie in (0, 180]");
    if (!(fov_v_deg > 0.0 && fov_v_deg <= 180.0)) throw std::invalid_argument("fov_v must lie in (0, 180]");
    if (res_u < 1 || res_v < 1) throw std::invalid_argument("sensor resolution must be >= 1");
    if (!(max_range > 0.0)) throw std::invalid_argument("max_range must be positive");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be non-negative");
}

std::vector<Vec3> ray_directions(const SensorModel& model) {
    constexpr double deg = std::numbers::pi / 180.0;
    std::vector<Vec3> dirs;
    dirs.reserve(model.pixel_count());
    for (int v = 0; v < model.res_v; ++v) {
        const double beta = (-model.fov_v_deg / 2.0 + (v + 0.5) * model.fov_v_deg / model.res_v) * deg;
        for (int u = 0; u < model.res_u; ++u) {
            const double alpha =
                (-model.fov_h_deg / 2.0 + (u + 0.5) * model.fov_h_deg / model.res_u) * deg;
            dirs.push_back(Vec3(std::tan(alpha), std::tan(beta), 1.0).normalized());
        }
    }
    return dirs;
}

std::vector<Vec3> world_ray_directions(const std::vector<Vec3>& sensor_rays, const SensorPose& pose) {
    const Eigen::Matrix3d r = pose.orientation.toRotationMatrix();
    std::vector<Vec3> out;
    out.reserve(sensor_rays.size());
    for (const Vec3& d : sensor_rays) out.push_back(r * d);
    return out;
}

ScanFrame render_scan(const Scene& scene, const SensorPose& pose, const SensorModel& model,
                      std::uint64_t seed) {
    model.validate();
    if (!scene.workspace.contains(pose.position))
        throw PoseOutsideWorkspace("sensor pose lies outside the workspace");

    ScanFrame scan;
    scan.pose = pose;
    scan.res_u = model.res_u;
    scan.res_v = model.res_v;
    scan.max_range = model.max_range;
    scan.directions = world_ray_directions(ray_directions(model), pose);
    scan.depths.reserve(scan.directions.size());

    Rng rng(seed);
    for (const Vec3& dir : scan.directions) {
        const auto hit = ray_hit(scene, pose.position, dir);
        double depth = hit ? hit->t : kNoReturn;
        if (depth > model.max_range) depth = kNoReturn;
        if (ScanFrame::returned(depth) && model.noise_sigma > 0.0) {
            depth += rng.normal(model.noise_sigma);
            if (!(depth > 0.0 && depth <= model.max_range)) depth = kNoReturn;
        }
        scan.depths.push_back(depth);
    }
    return scan;
}

void write_scan(std::ostream& out, const ScanFrame& scan) {
    char line[64];
    for (int v = 0; v < scan.res_v; ++v)
        for (int u = 0; u < scan.res_u; ++u) {
            const double d = scan.depths[static_cast<std::size_t>(v) * scan.res_u + u];
            if (ScanFrame::returned(d))
                std::snprintf(line, sizeof line, "%d %d %.6f\n", u, v, d);
            else
                std::snprintf(line, sizeof line, "%d %d inf\n", u, v);
            out << line;
        }
}

}  // namespace lrnbv

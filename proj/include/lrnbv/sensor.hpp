#pragma once

#include "lrnbv/geometry.hpp"
#include "lrnbv/scan_frame.hpp"
#include "lrnbv/scene.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace lrnbv {

/// Low-resolution time-of-flight sensor. Defaults describe an 8x8 zone device
/// with a 45 x 45 degree field of view.
struct SensorModel {
    double fov_h_deg = 45.0;
    double fov_v_deg = 45.0;
    int res_u = 8;
    int res_v = 8;
    double max_range = 4.0;
    double noise_sigma = 0.0;

    void validate() const;
    int pixel_count() const { return res_u * res_v; }
};

/// Sensor-frame unit directions, index v * res_u + u. Pixel centers are spaced
/// equiangularly: alpha_u = -fov_h/2 + (u + 0.5) * fov_h / res_u, likewise beta_v,
/// and direction = normalize(tan alpha_u, tan beta_v, 1).
std::vector<Vec3> ray_directions(const SensorModel& model);

/// Same bundle rotated into the world frame by the pose orientation.
std::vector<Vec3> world_ray_directions(const std::vector<Vec3>& sensor_rays, const SensorPose& pose);

class PoseOutsideWorkspace : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Simulated acquisition against the ground-truth scene. Noise (if any) is
/// zero-mean Gaussian on range and fully determined by `seed`.
ScanFrame render_scan(const Scene& scene, const SensorPose& pose, const SensorModel& model,
                      std::uint64_t seed);

/// Debug dump: one "u v depth" line per pixel, "inf" for no return.
void write_scan(std::ostream& out, const ScanFrame& scan);

}  // namespace lrnbv

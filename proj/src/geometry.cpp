#include "lrnbv/geometry.hpp"

#include <cmath>
#include <limits>

namespace lrnbv {

std::optional<RayInterval> intersect_ray_box(const Vec3& origin, const Vec3& dir, const Aabb& box) {
    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0) {
            if (origin[a] < box.min[a] || origin[a] > box.max[a]) return std::nullopt;
            continue;
        }
        const double inv = 1.0 / dir[a];
        double t0 = (box.min[a] - origin[a]) * inv;
        double t1 = (box.max[a] - origin[a]) * inv;
        if (t0 > t1) std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
        if (t_enter > t_exit) return std::nullopt;
    }
    return RayInterval{t_enter, t_exit};
}

Quat look_at(const Vec3& position, const Vec3& target) {
    const Vec3 z = (target - position).normalized();
    Vec3 reference = -Vec3::UnitZ();
    if (std::abs(z.dot(reference)) > 1.0 - 1e-9) reference = Vec3::UnitX();
    const Vec3 y = (reference - reference.dot(z) * z).normalized();
    const Vec3 x = y.cross(z);
    Eigen::Matrix3d r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    return Quat(r).normalized();
}

}  // namespace lrnbv

#pragma once

#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <random>

namespace lrnbv {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Axis-aligned box in meters. Closed on both ends.
struct Aabb {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    static Aabb from_points(const Vec3& a, const Vec3& b) {
        return {a.cwiseMin(b), a.cwiseMax(b)};
    }

    bool valid() const { return (min.array() <= max.array()).all(); }
    bool non_degenerate() const { return (min.array() < max.array()).all(); }
    Vec3 extent() const { return max - min; }
    Vec3 center() const { return 0.5 * (min + max); }
    double volume() const {
        const Vec3 e = extent().cwiseMax(0.0);
        return e.x() * e.y() * e.z();
    }

    bool contains(const Vec3& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
    bool strictly_contains(const Vec3& p) const {
        return (p.array() > min.array()).all() && (p.array() < max.array()).all();
    }
    bool contains(const Aabb& other) const { return contains(other.min) && contains(other.max); }

    Aabb inflated(double margin) const { return {min.array() - margin, max.array() + margin}; }

    void expand(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }

    /// Euclidean distance from p to the box (0 inside).
    double distance_to(const Vec3& p) const {
        const Vec3 d = (min - p).cwiseMax(p - max).cwiseMax(0.0);
        return d.norm();
    }

    bool operator==(const Aabb& o) const { return min == o.min && max == o.max; }
};

/// Parametric interval [t_enter, t_exit] where origin + t*dir lies inside the box.
/// Slab method; empty when the ray misses.
struct RayInterval {
    double t_enter;
    double t_exit;
};
std::optional<RayInterval> intersect_ray_box(const Vec3& origin, const Vec3& dir, const Aabb& box);

/// Sensor pose in the world frame. The sensor looks along its local +z axis,
/// with +x to the right and +y down in the image.
struct SensorPose {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();

    Vec3 forward() const { return orientation * Vec3::UnitZ(); }

    /// px py pz qx qy qz qw
    std::array<double, 7> to_array() const {
        return {position.x(),       position.y(),       position.z(),      orientation.x(),
                orientation.y(),    orientation.z(),    orientation.w()};
    }
};

/// Orientation whose +z axis points from `position` toward `target`.
/// The image +y axis is kept as close as possible to world -z; when looking
/// straight up or down the world x axis is used as the reference instead.
Quat look_at(const Vec3& position, const Vec3& target);

/// Every random draw in the project flows through this wrapper. The engine is
/// std::mt19937_64, whose output sequence is fixed by the standard; uniform
/// doubles are built from the top 53 bits so they are portable too. Normal
/// draws go through std::normal_distribution and are only reproducible within
/// one standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(engine_); }

private:
    std::mt19937_64 engine_;
};

}  // namespace lrnbv

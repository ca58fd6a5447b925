#pragma once

#include "lrnbv/geometry.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrnbv {

/// Union of axis-aligned boxes standing on the table.
struct GroundTruthObject {
    std::string name;
    std::vector<Aabb> parts;

    /// Tight bounds of all parts; the reference box for IoU.
    Aabb bounds() const;
};

struct Scene {
    Aabb workspace;
    double table_height = 0.0;
    GroundTruthObject object;
    SensorPose home;
};

/// Raised by load_scene. `line()` is 0 for whole-scene invariant violations.
class SceneError : public std::runtime_error {
public:
    SceneError(const std::string& what, int line) : std::runtime_error(what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Parses the line-oriented scene format:
///
///     workspace min_x min_y min_z max_x max_y max_z
///     table z
///     home px py pz qx qy qz qw
///     part min_x min_y min_z max_x max_y max_z     (repeatable)
///     name label
///
/// `#` starts a comment. The result satisfies every Scene invariant.
Scene load_scene(const std::string& text);
Scene load_scene_file(const std::string& path);

/// Canonical text form; load_scene(save_scene(s)) reproduces s exactly.
std::string save_scene(const Scene& scene);

/// Throws SceneError naming the violated constraint.
void validate_scene(const Scene& scene);

struct RayHit {
    double t;
    Vec3 point;
};

/// First positive intersection with any object part or the table plane.
/// `direction` must be unit length.
std::optional<RayHit> ray_hit(const Scene& scene, const Vec3& origin, const Vec3& direction);

/// Grid samples over the exposed object surface. Each face of every part gets
/// ceil(edge / spacing) + 1 evenly spaced samples per edge, corners included.
/// Faces lying on the table and samples strictly inside another part are dropped.
std::vector<Vec3> surface_samples(const Scene& scene, double spacing);

}  // namespace lrnbv

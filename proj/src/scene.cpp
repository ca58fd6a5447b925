#include "lrnbv/scene.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace lrnbv {

namespace {

std::vector<double> parse_numbers(std::istringstream& in, std::size_t expected,
                                  const std::string& key, int line) {
    std::vector<double> values;
    std::string token;
    while (in >> token) {
        double v = 0.0;
        const char* end = token.data() + token.size();
        auto [ptr, ec] = std::from_chars(token.data(), end, v);
        if (ec != std::errc{} || ptr != end || !std::isfinite(v))
            throw SceneError("line " + std::to_string(line) + ": '" + key +
                                 "' expects numbers, got '" + token + "'",
                             line);
        values.push_back(v);
    }
    if (values.size() != expected)
        throw SceneError("line " + std::to_string(line) + ": '" + key + "' expects " +
                             std::to_string(expected) + " values, got " +
                             std::to_string(values.size()),
                         line);
    return values;
}

Aabb box_from(const std::vector<double>& v) { return {Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])}; }

std::string fmt(double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::string fmt_box(const Aabb& b) {
    return fmt(b.min.x()) + " " + fmt(b.min.y()) + " " + fmt(b.min.z()) + " " + fmt(b.max.x()) +
           " " + fmt(b.max.y()) + " " + fmt(b.max.z());
}

}  // namespace

Aabb GroundTruthObject::bounds() const {
    if (parts.empty()) return {};
    Aabb out = parts.front();
    for (const Aabb& p : parts) {
        out.expand(p.min);
        out.expand(p.max);
    }
    return out;
}

void validate_scene(const Scene& scene) {
    if (!scene.workspace.non_degenerate()) throw SceneError("workspace must be non-degenerate", 0);
    if (scene.object.parts.empty()) throw SceneError("object needs at least one part", 0);
    for (std::size_t i = 0; i < scene.object.parts.size(); ++i) {
        const Aabb& part = scene.object.parts[i];
        const std::string label = "part " + std::to_string(i + 1);
        if (!part.non_degenerate()) throw SceneError(label + " must be non-degenerate", 0);
        if (!scene.workspace.contains(part))
            throw SceneError(label + " violates containment: object must lie inside the workspace", 0);
        if (part.min.z() < scene.table_height)
            throw SceneError(label + " violates containment: object must lie above table_height", 0);
    }
    if (!scene.workspace.contains(scene.home.position))
        throw SceneError("home pose must lie inside the workspace", 0);
}

Scene load_scene(const std::string& text) {
    Scene scene;
    bool have_workspace = false, have_table = false, have_home = false;
    std::istringstream lines(text);
    std::string raw;
    int line = 0;
    while (std::getline(lines, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream in(raw);
        std::string key;
        if (!(in >> key)) continue;
        if (key == "workspace") {
            scene.workspace = box_from(parse_numbers(in, 6, key, line));
            have_workspace = true;
        } else if (key == "table") {
            scene.table_height = parse_numbers(in, 1, key, line)[0];
            have_table = true;
        } else if (key == "home") {
            const auto v = parse_numbers(in, 7, key, line);
            Quat q(v[6], v[3], v[4], v[5]);
            const double norm = q.norm();
            if (std::abs(norm - 1.0) > 1e-6)
                throw SceneError("line " + std::to_string(line) + ": home quaternion is not unit length", line);
            if (std::abs(norm - 1.0) > 1e-12) q.normalize();
            scene.home = {Vec3(v[0], v[1], v[2]), q};
            have_home = true;
        } else if (key == "part") {
            scene.object.parts.push_back(box_from(parse_numbers(in, 6, key, line)));
        } else if (key == "name") {
            std::string label;
            std::getline(in >> std::ws, label);
            while (!label.empty() && std::isspace(static_cast<unsigned char>(label.back()))) label.pop_back();
            if (label.empty()) throw SceneError("line " + std::to_string(line) + ": 'name' needs a label", line);
            scene.object.name = label;
        } else {
            throw SceneError("line " + std::to_string(line) + ": unknown key '" + key + "'", line);
        }
    }
    if (!have_workspace) throw SceneError("missing 'workspace' entry", 0);
    if (!have_table) throw SceneError("missing 'table' entry", 0);
    if (!have_home) throw SceneError("missing 'home' entry", 0);
    validate_scene(scene);
    return scene;
}

Scene load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open scene file '" + path + "'", 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scene(buf.str());
}

std::string save_scene(const Scene& scene) {
    std::string out;
    if (!scene.object.name.empty()) out += "name " + scene.object.name + "\n";
    out += "workspace " + fmt_box(scene.workspace) + "\n";
    out += "table " + fmt(scene.table_height) + "\n";
    const auto& p = scene.home.position;
    const auto& q = scene.home.orientation;
    out += "home " + fmt(p.x()) + " " + fmt(p.y()) + " " + fmt(p.z()) + " " + fmt(q.x()) + " " +
           fmt(q.y()) + " " + fmt(q.z()) + " " + fmt(q.w()) + "\n";
    for (const Aabb& part : scene.object.parts) out += "part " + fmt_box(part) + "\n";
    return out;
}

std::optional<RayHit> ray_hit(const Scene& scene, const Vec3& origin, const Vec3& direction) {
    double best = std::numeric_limits<double>::infinity();
    for (const Aabb& part : scene.object.parts) {
        const auto hit = intersect_ray_box(origin, direction, part);
        if (!hit) continue;
        const double t = hit->t_enter > 0.0 ? hit->t_enter : hit->t_exit;
        if (t > 0.0) best = std::min(best, t);
    }
    if (direction.z() != 0.0) {
        const double t = (scene.table_height - origin.z()) / direction.z();
        if (t > 0.0) best = std::min(best, t);
    }
    if (!std::isfinite(best)) return std::nullopt;
    return RayHit{best, origin + best * direction};
}

std::vector<Vec3> surface_samples(const Scene& scene, double spacing) {
    if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
    const auto& parts = scene.object.parts;
    std::vector<Vec3> out;
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        const Aabb& part = parts[pi];
        const Vec3 extent = part.extent();
        for (int axis = 0; axis < 3; ++axis) {
            for (int side = 0; side < 2; ++side) {
                const double level = side == 0 ? part.min[axis] : part.max[axis];
                if (axis == 2 && side == 0 && level == scene.table_height) continue;
                const int u = (axis + 1) % 3;
                const int v = (axis + 2) % 3;
                const int nu = static_cast<int>(std::ceil(extent[u] / spacing - 1e-9)) + 1;
                const int nv = static_cast<int>(std::ceil(extent[v] / spacing - 1e-9)) + 1;
                for (int a = 0; a < nu; ++a) {
                    for (int b = 0; b < nv; ++b) {
                        Vec3 s;
                        s[axis] = level;
                        s[u] = part.min[u] + extent[u] * a / (nu - 1);
                        s[v] = part.min[v] + extent[v] * b / (nv - 1);
                        bool hidden = false;
                        for (std::size_t qi = 0; qi < parts.size() && !hidden; ++qi)
                            hidden = qi != pi && parts[qi].strictly_contains(s);
                        if (!hidden) out.push_back(s);
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace lrnbv

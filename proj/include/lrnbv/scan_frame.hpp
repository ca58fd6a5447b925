#pragma once

#include "lrnbv/geometry.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace lrnbv {

inline constexpr double kNoReturn = std::numeric_limits<double>::infinity();

/// One depth acquisition from a pose. Pixel (u, v) lives at index v * res_u + u.
struct ScanFrame {
    SensorPose pose;
    int res_u = 0;
    int res_v = 0;
    double max_range = 0.0;
    std::vector<double> depths;       ///< meters, or kNoReturn
    std::vector<Vec3> directions;     ///< world-frame unit ray per pixel

    static bool returned(double depth) { return std::isfinite(depth); }

    /// World-frame hit points of every returned pixel, in pixel order.
    std::vector<Vec3> points() const {
        std::vector<Vec3> out;
        for (std::size_t i = 0; i < depths.size(); ++i)
            if (returned(depths[i])) out.push_back(pose.position + depths[i] * directions[i]);
        return out;
    }
};

}  // namespace lrnbv

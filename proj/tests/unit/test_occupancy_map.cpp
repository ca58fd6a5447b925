#include "lrnbv/occupancy_map.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace lrnbv;

namespace {

const Aabb kBox{{0, 0, 0}, {0.1, 0.1, 0.1}};

ScanFrame single_ray(const Vec3& origin, const Vec3& dir, double depth, double max_range = 1.0) {
    ScanFrame scan;
    scan.pose.position = origin;
    scan.res_u = scan.res_v = 1;
    scan.max_range = max_range;
    scan.depths = {depth};
    scan.directions = {dir.normalized()};
    return scan;
}

}  // namespace

TEST_SUITE("unit.occupancy_map") {

TEST_CASE("axis-aligned traversal visits every voxel in order") {
    const VoxelMap map(kBox, 0.01);
    const auto keys = traverse({0.005, 0.005, 0.005}, {0.035, 0.005, 0.005}, map);
    REQUIRE(keys.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(keys[i] == VoxelKey{i, 0, 0});
}

TEST_CASE("degenerate segment traverses nothing") {
    const VoxelMap map(kBox, 0.01);
    CHECK(traverse({0.02, 0.02, 0.02}, {0.02, 0.02, 0.02}, map).empty());
    CHECK(traverse({0.02, 0.02, 0.02}, {0.02 + 1e-10, 0.02, 0.02}, map).empty());
}

TEST_CASE("traversal is clipped to the map bounds") {
    const VoxelMap map(kBox, 0.01);
    const auto keys = traverse({-0.5, 0.005, 0.005}, {0.5, 0.005, 0.005}, map);
    REQUIRE(keys.size() == 10);
    CHECK(keys.front() == VoxelKey{0, 0, 0});
    CHECK(keys.back() == VoxelKey{9, 0, 0});
}

TEST_CASE("single hit sets ln(0.7/0.3) on the hit voxel and misses before it") {
    VoxelMap map(kBox, 0.01);
    integrate_scan(map, single_ray({0.005, 0.005, 0.005}, {1, 0, 0}, 0.05));
    const auto hit = map.log_odds({5, 0, 0});
    REQUIRE(hit);
    CHECK(*hit == doctest::Approx(std::log(0.7 / 0.3)));
    CHECK(*hit == doctest::Approx(0.847).epsilon(1e-3));
    for (int i = 0; i < 5; ++i) CHECK(*map.log_odds({i, 0, 0}) == doctest::Approx(std::log(0.4 / 0.6)));
    CHECK_FALSE(map.log_odds({6, 0, 0}));
}

TEST_CASE("repeated hits saturate at clamp_max") {
    VoxelMap map(kBox, 0.01);
    for (int r = 0; r < 20; ++r) integrate_scan(map, single_ray({0.005, 0.005, 0.005}, {1, 0, 0}, 0.05));
    CHECK(*map.log_odds({5, 0, 0}) == doctest::Approx(logit(0.97)));
    CHECK(*map.log_odds({5, 0, 0}) <= map.clamp_max());
    CHECK(*map.log_odds({0, 0, 0}) == doctest::Approx(logit(0.12)));
}

TEST_CASE("hit then miss adds the log-odds") {
    VoxelMap map(kBox, 0.01);
    const VoxelKey key{3, 3, 3};
    map.update(key, map.hit_delta());
    map.update(key, map.miss_delta());
    CHECK(*map.log_odds(key) == doctest::Approx(0.442).epsilon(1e-3));
    CHECK(*map.log_odds(key) == doctest::Approx(std::log(0.7 / 0.3) + std::log(0.4 / 0.6)));
}

TEST_CASE("no-return rays clear free space up to max range") {
    VoxelMap map(kBox, 0.01);
    integrate_scan(map, single_ray({0.005, 0.005, 0.005}, {1, 0, 0}, kNoReturn, 0.04));
    for (int i = 0; i < 5; ++i) CHECK(map.log_odds({i, 0, 0}));
    CHECK_FALSE(map.log_odds({5, 0, 0}));
}

TEST_CASE("state classification") {
    VoxelMap map(kBox, 0.01);
    CHECK(state_at(map, {0.05, 0.05, 0.05}) == VoxelState::Unknown);
    CHECK(state_at(map, {5, 5, 5}) == VoxelState::Unknown);
    map.update({1, 1, 1}, map.hit_delta());
    CHECK(state_at(map, {0.015, 0.015, 0.015}) == VoxelState::Occupied);
    for (int r = 0; r < 3; ++r) map.update({2, 2, 2}, map.miss_delta());
    CHECK(3 * std::log(0.4 / 0.6) < map.free_threshold());
    CHECK(state_at(map, {0.025, 0.025, 0.025}) == VoxelState::Free);
    map.update({4, 4, 4}, map.miss_delta());
    CHECK(state_at(map, {0.045, 0.045, 0.045}) == VoxelState::Unknown);
}

TEST_CASE("scan from outside the bounds is rejected and leaves the map untouched") {
    VoxelMap map(kBox, 0.01);
    CHECK_THROWS_AS(integrate_scan(map, single_ray({-1, 0.05, 0.05}, {1, 0, 0}, 1.05)), ScanRejected);
    CHECK(map.stored_count() == 0);
}

TEST_CASE("occupied centers are exactly the hit voxels") {
    VoxelMap map(kBox, 0.01);
    CHECK(occupied_centers(map, kBox).empty());
    ScanFrame scan = single_ray({0.005, 0.005, 0.005}, {1, 0, 0}, 0.05);
    scan.res_u = 3;
    scan.depths = {0.05, 0.07, 0.03};
    scan.directions = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    integrate_scan(map, scan);
    const auto centers = occupied_centers(map, kBox);
    REQUIRE(centers.size() == 3);
    const auto& g = map.grid();
    CHECK(centers[0] == g.center({5, 0, 0}));
    CHECK(centers[1] == g.center({0, 7, 0}));
    CHECK(centers[2] == g.center({0, 0, 3}));
    CHECK(occupied_centers(map, Aabb{{0, 0.05, 0}, {0.1, 0.1, 0.1}}).size() == 1);
}

TEST_CASE("voxel keys and centers correspond") {
    const VoxelMap map(Aabb{{-0.3, 0.1, 0}, {0.3, 0.5, 0.2}}, 0.01);
    const auto& g = map.grid();
    CHECK(g.dims == std::array<int, 3>{60, 40, 20});
    const VoxelKey key{17, 3, 19};
    CHECK(*g.key_of(g.center(key)) == key);
    CHECK((g.center(key) - Vec3(-0.3 + 0.175, 0.1 + 0.035, 0.195)).norm() < 1e-12);
    CHECK(*g.key_of(g.bounds.max) == VoxelKey{59, 39, 19});
    CHECK_FALSE(g.key_of(Vec3(1, 1, 1)));
}

TEST_CASE("point export uses six decimals") {
    std::ostringstream out;
    write_points(out, {Vec3(0.1, -0.25, 1.0 / 3.0)});
    CHECK(out.str() == "0.100000 -0.250000 0.333333\n");
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS(VoxelMap(kBox, 0.0));
    CHECK_THROWS(VoxelMap(Aabb{{0, 0, 0}, {0, 1, 1}}, 0.01));
    OccupancyParams p;
    p.p_clamp_min = 0.99;
    CHECK_THROWS(VoxelMap(kBox, 0.01, p));
    p = {};
    p.p_hit = 1.0;
    CHECK_THROWS(p.validate());
}

}

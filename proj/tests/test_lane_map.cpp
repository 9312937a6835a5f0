#include <doctest.h>

#include "probe_mpc/lane_map.hpp"

using namespace probe_mpc;

namespace {

LaneMap three_lane_map() {
  LaneMap map;
  for (double y : {7.0, 3.5, 0.0}) {
    Lane lane;
    lane.centerline = {{0.0, y}, {150.0, y}};
    lane.width = 3.5;
    map.lanes.push_back(lane);
  }
  return map;
}

}  // namespace

TEST_CASE("projection: arc length and signed lateral offset") {
  const LaneMap map = three_lane_map();
  const LaneProjection proj = map.project_onto(1, {10.0, 4.0});
  CHECK(proj.s == doctest::Approx(10.0));
  CHECK(proj.lateral == doctest::Approx(0.5));  // left of +x travel
  CHECK(proj.distance == doctest::Approx(0.5));
  const LaneProjection right = map.project_onto(1, {10.0, 3.0});
  CHECK(right.lateral == doctest::Approx(-0.5));
}

TEST_CASE("projection: nearest path wins") {
  const LaneMap map = three_lane_map();
  CHECK(map.project({20.0, 6.0}).path_index == 0);
  CHECK(map.project({20.0, 1.0}).path_index == 2);
}

TEST_CASE("point_at: interpolation and extrapolation") {
  Lane lane;
  lane.centerline = {{0, 0}, {10, 0}, {10, 5}};
  CHECK(lane.point_at(5.0).isApprox(Eigen::Vector2d(5, 0)));
  CHECK(lane.point_at(12.0).isApprox(Eigen::Vector2d(10, 2)));
  CHECK(lane.point_at(-2.0).isApprox(Eigen::Vector2d(-2, 0)));
  CHECK(lane.point_at(20.0).isApprox(Eigen::Vector2d(10, 10)));
  CHECK(lane.length() == doctest::Approx(15.0));
}

TEST_CASE("adjacent_lane: nearest other lane within the gap") {
  const LaneMap map = three_lane_map();
  const auto adjacent = map.adjacent_lane(1, {10.0, 3.0}, 7.0);
  REQUIRE(adjacent.has_value());
  CHECK(*adjacent == 2);  // drifting low, bottom lane is nearer
  const auto upper = map.adjacent_lane(1, {10.0, 4.2}, 7.0);
  REQUIRE(upper.has_value());
  CHECK(*upper == 0);
  const auto none = map.adjacent_lane(1, {10.0, 3.5}, 0.5);
  CHECK(!none.has_value());
}

TEST_CASE("off_all_lanes") {
  const LaneMap map = three_lane_map();
  CHECK(!map.off_all_lanes({10.0, 3.5}));
  CHECK(!map.off_all_lanes({10.0, 9.0}));
  CHECK(map.off_all_lanes({10.0, 40.0}));
}

TEST_CASE("validate: rejects bad geometry") {
  LaneMap empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
  LaneMap degenerate;
  Lane lane;
  lane.centerline = {{0, 0}, {0, 0}};
  degenerate.lanes.push_back(lane);
  CHECK_THROWS_AS(degenerate.validate(), std::invalid_argument);
  LaneMap bad_width = three_lane_map();
  bad_width.lanes[0].width = 0.0;
  CHECK_THROWS_AS(bad_width.validate(), std::invalid_argument);
}

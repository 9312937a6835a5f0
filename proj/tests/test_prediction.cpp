#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <random>

#include "probe_mpc/prediction.hpp"

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

std::vector<AgentState> straight_history(double y, double v, int n,
                                         double dt = 0.1) {
  std::vector<AgentState> history;
  for (int i = 0; i < n; ++i) history.push_back({v * dt * i, y, 0.0, v});
  return history;
}

}  // namespace

TEST_CASE("predict: centerline driving makes modes 1 and 2 coincide") {
  const LaneMap map = three_lane_map();
  const auto modes = predict(straight_history(3.5, 5.0, 8), map, 25, 0.1);
  REQUIRE(modes.size() == 3);
  for (int t = 0; t < 25; ++t) {
    CHECK((modes[0].mean[t] - modes[1].mean[t]).norm() < 1e-9);
  }
  CHECK(modes[2].likelihood < modes[0].likelihood);
  CHECK(modes[2].likelihood < modes[1].likelihood);
}

TEST_CASE("predict: likelihoods normalize and covariances grow") {
  const LaneMap map = three_lane_map();
  const auto modes = predict(straight_history(3.5, 5.0, 8), map, 25, 0.1);
  double total = 0.0;
  for (const ModePrediction& mode : modes) total += mode.likelihood;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  for (const ModePrediction& mode : modes) {
    for (int t = 0; t < 25; ++t) {
      Eigen::LLT<Eigen::Matrix2d> llt(mode.cov[t]);
      CHECK(llt.info() == Eigen::Success);
      if (t > 0) {
        CHECK(mode.cov[t](0, 0) > mode.cov[t - 1](0, 0));
        CHECK(mode.cov[t](1, 1) > mode.cov[t - 1](1, 1));
      }
    }
  }
}

TEST_CASE("predict: lateral drift toward the adjacent lane favors mode 3") {
  const LaneMap map = three_lane_map();
  // Drifting from the middle lane toward the top lane at 0.5 m/s.
  std::vector<AgentState> history;
  const double vy = 0.5, vx = 5.0;
  const double theta = std::atan2(vy, vx);
  const double speed = std::hypot(vx, vy);
  for (int i = 0; i < 8; ++i) {
    history.push_back({vx * 0.1 * i, 3.8 + vy * 0.1 * i, theta, speed});
  }
  const auto modes = predict(history, map, 25, 0.1);
  CHECK(modes[2].likelihood > modes[1].likelihood);
  // Mode 3 heads for the top lane; mode 2 recenters on the middle lane.
  CHECK(modes[2].mean.back().y() > modes[1].mean.back().y() + 0.8);
  CHECK(std::abs(modes[2].mean.back().y() - 7.0) <
        std::abs(modes[1].mean.back().y() - 7.0));
}

TEST_CASE("predict: yielding history favors the braking mode") {
  const LaneMap map = three_lane_map();
  std::vector<AgentState> history;
  double v = 6.0, x = 0.0;
  for (int i = 0; i < 8; ++i) {
    history.push_back({x, 3.5, 0.0, v});
    x += v * 0.1;
    v = std::max(0.0, v - 2.0 * 0.1);
  }
  const auto modes = predict(history, map, 25, 0.1);
  // No lateral drift, so mode 3 is brake-in-lane and should beat both
  // constant-speed hypotheses.
  CHECK(modes[2].likelihood > modes[0].likelihood);
  CHECK(modes[2].likelihood > modes[1].likelihood);
  // The braking mean falls behind the constant-velocity mean.
  CHECK(modes[2].mean.back().x() < modes[0].mean.back().x());
}

TEST_CASE("predict: insufficient history is rejected") {
  const LaneMap map = three_lane_map();
  CHECK_THROWS_AS(predict({{0, 3.5, 0, 5}}, map, 25, 0.1),
                  std::invalid_argument);
}

TEST_CASE("predict: off-road agents fall back to constant velocity") {
  const LaneMap map = three_lane_map();
  const auto modes = predict(straight_history(45.0, 4.0, 6), map, 25, 0.1);
  CHECK(modes[0].likelihood == 1.0);
  CHECK(modes[1].likelihood == 0.0);
  CHECK(modes[2].likelihood == 0.0);
  for (int t = 0; t < 25; ++t) {
    CHECK((modes[1].mean[t] - modes[0].mean[t]).norm() == 0.0);
    CHECK((modes[2].mean[t] - modes[0].mean[t]).norm() == 0.0);
  }
}

TEST_CASE("predict: first mean stays within one motion step") {
  const LaneMap map = three_lane_map();
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> uy(-0.8, 0.8), uv(2.0, 8.0),
      ut(-0.15, 0.15);
  for (int trial = 0; trial < 50; ++trial) {
    const double v = uv(rng), theta = ut(rng), y = 3.5 + uy(rng);
    std::vector<AgentState> history;
    for (int i = 0; i < 6; ++i) {
      history.push_back({v * 0.1 * i * std::cos(theta), y + v * 0.1 * i * std::sin(theta),
                         theta, v});
    }
    const auto modes = predict(history, map, 25, 0.1);
    const Eigen::Vector2d last(history.back().x, history.back().y);
    for (const ModePrediction& mode : modes) {
      CHECK((mode.mean[0] - last).norm() <= v * 0.1 + 0.2);
    }
  }
}

TEST_CASE("ego_distribution: isotropic growing tube") {
  Trajectory reference;
  reference.dt = 0.1;
  for (int t = 0; t <= 25; ++t) reference.states.push_back({0.5 * t, 0, 0, 5});
  const EgoDistribution dist = ego_distribution(reference, 0.25, 0.1);
  REQUIRE(dist.length() == 26);
  CHECK(dist.cov[0](0, 0) == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(dist.cov[0](1, 1) == doctest::Approx(0.0625).epsilon(1e-12));
  for (std::size_t t = 1; t < dist.length(); ++t) {
    CHECK(dist.cov[t].trace() > dist.cov[t - 1].trace());
  }
  const EgoDistribution flat = ego_distribution(reference, 0.25, 0.0);
  for (std::size_t t = 0; t < flat.length(); ++t) {
    CHECK(flat.cov[t](0, 0) == doctest::Approx(0.0625).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ego_distribution(Trajectory{}, 0.25, 0.1),
                  std::invalid_argument);
}

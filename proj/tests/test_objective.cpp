#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>

#include "probe_mpc/dynamics.hpp"
#include "probe_mpc/objective.hpp"

using namespace probe_mpc;

namespace {

Trajectory straight_reference(int steps, double v) {
  Trajectory ref;
  ref.dt = 0.1;
  for (int t = 0; t <= steps; ++t) ref.states.push_back({v * 0.1 * t, 0, 0, v});
  return ref;
}

}  // namespace

TEST_CASE("utility: perfect tracking with zero input scores zero") {
  const Trajectory ref = straight_reference(10, 5.0);
  const std::vector<ControlInput> inputs(10, ControlInput{0, 0});
  const Trajectory traj = rollout(ref.states[0], inputs, 0.1);
  CHECK(utility(traj, inputs, ref, Eigen::Matrix4d::Identity(),
                Eigen::Matrix2d::Identity()) == doctest::Approx(0.0));
}

TEST_CASE("utility: unit deviation in one state coordinate") {
  Trajectory ref;
  ref.dt = 0.1;
  ref.states.push_back({0, 0, 0, 0});
  ref.states.push_back({1, 0, 0, 0});
  Trajectory traj = ref;
  traj.states[1].x = 2.0;  // deviation (1, 0, 0, 0)
  const std::vector<ControlInput> inputs(1, ControlInput{0, 0});
  CHECK(utility(traj, inputs, ref, Eigen::Matrix4d::Identity(),
                Eigen::Matrix2d::Identity()) == doctest::Approx(-1.0));
}

TEST_CASE("utility: random instance matches a scalar-loop expansion") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Trajectory ref, traj;
  ref.dt = traj.dt = 0.1;
  std::vector<ControlInput> inputs;
  for (int t = 0; t <= 3; ++t) {
    ref.states.push_back({u(rng), u(rng), u(rng), u(rng)});
    traj.states.push_back({u(rng), u(rng), u(rng), u(rng)});
  }
  for (int t = 0; t < 3; ++t) inputs.push_back({u(rng), u(rng)});
  Eigen::Matrix4d q = Eigen::Vector4d(0.7, 1.1, 0.3, 0.5).asDiagonal();
  q(0, 1) = q(1, 0) = 0.2;
  const Eigen::Matrix2d r =
      (Eigen::Matrix2d() << 0.4, 0.1, 0.1, 0.6).finished();

  // Independent term-by-term expansion of the quadratic forms.
  double expected = 0.0;
  for (int t = 1; t <= 3; ++t) {
    const double dx[4] = {traj.states[t].x - ref.states[t].x,
                          traj.states[t].y - ref.states[t].y,
                          traj.states[t].theta - ref.states[t].theta,
                          traj.states[t].v - ref.states[t].v};
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) expected += dx[i] * q(i, j) * dx[j];
    }
    const double du[2] = {inputs[t - 1].a, inputs[t - 1].omega};
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) expected += du[i] * r(i, j) * du[j];
    }
  }
  CHECK(utility(traj, inputs, ref, q, r) ==
        doctest::Approx(-expected).epsilon(1e-12));
}

TEST_CASE("utility: never positive") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const Eigen::Matrix4d q = Eigen::Vector4d(1, 1, 0.1, 0.5).asDiagonal();
  const Eigen::Matrix2d r = Eigen::Vector2d(0.1, 0.5).asDiagonal();
  for (int trial = 0; trial < 200; ++trial) {
    Trajectory ref, traj;
    std::vector<ControlInput> inputs;
    for (int t = 0; t <= 5; ++t) {
      ref.states.push_back({u(rng), u(rng), u(rng), std::abs(u(rng))});
      traj.states.push_back({u(rng), u(rng), u(rng), std::abs(u(rng))});
    }
    for (int t = 0; t < 5; ++t) inputs.push_back({u(rng), u(rng)});
    CHECK(utility(traj, inputs, ref, q, r) <= 0.0);
  }
}

TEST_CASE("safety_gap: ego at the predicted mean") {
  const double q = safety_gap({2, 3}, {2, 3}, Eigen::Matrix2d::Identity(), 4.0,
                              0.7);
  CHECK(q == doctest::Approx(-2.8).epsilon(1e-12));
}

TEST_CASE("safety_gap: identity covariance reduces to Euclidean") {
  const double q = safety_gap({3, 4}, {0, 0}, Eigen::Matrix2d::Identity(), 4.0,
                              0.5);
  CHECK(q == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("safety_gap: anisotropic covariance") {
  const Eigen::Matrix2d cov = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  // Mahalanobis sqrt(2^2 / 4) = 1, gap 1 - 4 = -3.
  const double q = safety_gap({2, 0}, {0, 0}, cov, 4.0, 1.0);
  CHECK(q == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK_THROWS_AS(safety_gap({1, 0}, {0, 0}, Eigen::Matrix2d::Zero(), 4.0, 1.0),
                  std::domain_error);
}

TEST_CASE("safety_penalty: anchor values") {
  const double zero_gap[] = {0.0};
  CHECK(safety_penalty(zero_gap, 1.0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const double far_gap[] = {1e6};
  CHECK(safety_penalty(far_gap, 0.02) == doctest::Approx(0.0));
  const double close_gap[] = {-50.0};
  CHECK(safety_penalty(close_gap, 0.02) ==
        doctest::Approx(std::log1p(std::exp(1.0))).epsilon(1e-12));
}

TEST_CASE("safety_penalty: numerically stable for huge exponents") {
  const double gaps_pos[] = {1e4 / 0.02};
  const double gaps_neg[] = {-1e4 / 0.02};
  const double small = safety_penalty(gaps_pos, 0.02);
  const double large = safety_penalty(gaps_neg, 0.02);
  CHECK(std::isfinite(small));
  CHECK(small == 0.0);
  CHECK(std::isfinite(large));
  CHECK(large == doctest::Approx(1e4).epsilon(1e-12));
}

TEST_CASE("safety_penalty: strictly decreasing in every gap") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> gaps(6);
    for (double& g : gaps) g = u(rng);
    const double base = safety_penalty(gaps, 0.5);
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      std::vector<double> bumped = gaps;
      bumped[i] += 0.5;
      CHECK(safety_penalty(bumped, 0.5) < base);
    }
  }
}

TEST_CASE("objective weights: validation") {
  ObjectiveWeights weights;
  CHECK_NOTHROW(weights.validate());
  weights.tau = -1.0;
  CHECK_THROWS_AS(weights.validate(), std::invalid_argument);
  weights = ObjectiveWeights{};
  weights.Q(0, 0) = -1.0;
  CHECK_THROWS_AS(weights.validate(), std::invalid_argument);
}

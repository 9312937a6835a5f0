#include "probe_mpc/geometry.hpp"

#include <cmath>

namespace probe_mpc {

std::array<Eigen::Vector2d, 4> footprint_corners(const AgentState& state,
                                                 double length, double width) {
  const Eigen::Vector2d center(state.x, state.y);
  const Eigen::Vector2d forward(std::cos(state.theta), std::sin(state.theta));
  const Eigen::Vector2d left(-forward.y(), forward.x());
  const Eigen::Vector2d half_f = 0.5 * length * forward;
  const Eigen::Vector2d half_l = 0.5 * width * left;
  return {center + half_f + half_l, center + half_f - half_l,
          center - half_f - half_l, center - half_f + half_l};
}

namespace {

bool separated_on_axes(const std::array<Eigen::Vector2d, 4>& a,
                       const std::array<Eigen::Vector2d, 4>& b,
                       const Eigen::Vector2d& axis1,
                       const Eigen::Vector2d& axis2) {
  for (const Eigen::Vector2d& axis : {axis1, axis2}) {
    double amin = std::numeric_limits<double>::infinity();
    double amax = -amin;
    double bmin = amin;
    double bmax = -amin;
    for (const auto& p : a) {
      const double v = axis.dot(p);
      amin = std::min(amin, v);
      amax = std::max(amax, v);
    }
    for (const auto& p : b) {
      const double v = axis.dot(p);
      bmin = std::min(bmin, v);
      bmax = std::max(bmax, v);
    }
    if (amax < bmin || bmax < amin) return true;
  }
  return false;
}

}  // namespace

bool footprints_overlap(const AgentState& a, const AgentState& b,
                        double length, double width) {
  const auto ca = footprint_corners(a, length, width);
  const auto cb = footprint_corners(b, length, width);
  const Eigen::Vector2d fa(std::cos(a.theta), std::sin(a.theta));
  const Eigen::Vector2d la(-fa.y(), fa.x());
  const Eigen::Vector2d fb(std::cos(b.theta), std::sin(b.theta));
  const Eigen::Vector2d lb(-fb.y(), fb.x());
  if (separated_on_axes(ca, cb, fa, la)) return false;
  if (separated_on_axes(ca, cb, fb, lb)) return false;
  return true;
}

bool footprint_inside_lane(const AgentState& state, const Lane& lane,
                           double length, double width) {
  for (const Eigen::Vector2d& corner : footprint_corners(state, length, width)) {
    const LaneProjection proj = project_polyline(lane.centerline, corner);
    if (std::abs(proj.lateral) > 0.5 * lane.width) return false;
  }
  return true;
}

}  // namespace probe_mpc

#include "probe_mpc/lane_map.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace probe_mpc {

namespace {

double segment_length(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (b - a).norm();
}

}  // namespace

LaneProjection project_polyline(const std::vector<Eigen::Vector2d>& polyline,
                                const Eigen::Vector2d& pos) {
  if (polyline.size() < 2) {
    throw std::invalid_argument("polyline needs at least two points");
  }
  LaneProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  double s_base = 0.0;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Eigen::Vector2d& a = polyline[i];
    const Eigen::Vector2d& b = polyline[i + 1];
    const double len = segment_length(a, b);
    if (len < 1e-12) continue;
    const Eigen::Vector2d dir = (b - a) / len;
    double u = dir.dot(pos - a);
    // Allow extrapolation on the first and last segment only.
    const bool first = (i == 0);
    const bool last = (i + 2 == polyline.size());
    const double lo = first ? -1e9 : 0.0;
    const double hi = last ? 1e9 : len;
    u = std::clamp(u, lo, hi);
    const Eigen::Vector2d closest = a + u * dir;
    const Eigen::Vector2d offset = pos - closest;
    const double dist = offset.norm();
    if (dist < best.distance) {
      best.distance = dist;
      best.s = s_base + u;
      best.point = closest;
      best.tangent = dir;
      // Signed lateral: positive to the left of the tangent.
      best.lateral = dir.x() * offset.y() - dir.y() * offset.x();
    }
    s_base += len;
  }
  return best;
}

double Lane::length() const {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < centerline.size(); ++i) {
    total += segment_length(centerline[i], centerline[i + 1]);
  }
  return total;
}

Eigen::Vector2d Lane::point_at(double s) const {
  if (centerline.size() < 2) {
    throw std::invalid_argument("lane centerline needs at least two points");
  }
  if (s < 0.0) {
    const Eigen::Vector2d dir =
        (centerline[1] - centerline[0]).normalized();
    return centerline.front() + s * dir;
  }
  double remaining = s;
  for (std::size_t i = 0; i + 1 < centerline.size(); ++i) {
    const double len = segment_length(centerline[i], centerline[i + 1]);
    if (remaining <= len || i + 2 == centerline.size()) {
      const Eigen::Vector2d dir = (centerline[i + 1] - centerline[i]) / len;
      return centerline[i] + remaining * dir;
    }
    remaining -= len;
  }
  return centerline.back();
}

Eigen::Vector2d Lane::tangent_at(double s) const {
  if (centerline.size() < 2) {
    throw std::invalid_argument("lane centerline needs at least two points");
  }
  if (s <= 0.0) return (centerline[1] - centerline[0]).normalized();
  double remaining = s;
  for (std::size_t i = 0; i + 1 < centerline.size(); ++i) {
    const double len = segment_length(centerline[i], centerline[i + 1]);
    if (remaining <= len || i + 2 == centerline.size()) {
      return (centerline[i + 1] - centerline[i]).normalized();
    }
    remaining -= len;
  }
  return (centerline.back() - centerline[centerline.size() - 2]).normalized();
}

double Lane::heading_at(double s) const {
  const Eigen::Vector2d t = tangent_at(s);
  return std::atan2(t.y(), t.x());
}

const Lane& LaneMap::path(std::size_t index) const {
  if (index < lanes.size()) return lanes[index];
  index -= lanes.size();
  if (index < connectors.size()) return connectors[index];
  throw std::out_of_range("lane map path index out of range");
}

LaneProjection LaneMap::project_onto(std::size_t index,
                                     const Eigen::Vector2d& pos) const {
  LaneProjection proj = project_polyline(path(index).centerline, pos);
  proj.path_index = static_cast<int>(index);
  return proj;
}

LaneProjection LaneMap::project(const Eigen::Vector2d& pos) const {
  if (path_count() == 0) {
    throw std::invalid_argument("lane map is empty");
  }
  LaneProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path_count(); ++i) {
    LaneProjection proj = project_onto(i, pos);
    if (proj.distance < best.distance) best = proj;
  }
  return best;
}

std::optional<std::size_t> LaneMap::adjacent_lane(std::size_t lane_index,
                                                  const Eigen::Vector2d& pos,
                                                  double max_gap) const {
  std::optional<std::size_t> best;
  double best_dist = max_gap;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    if (i == lane_index) continue;
    const LaneProjection proj = project_onto(i, pos);
    if (proj.distance < best_dist) {
      best_dist = proj.distance;
      best = i;
    }
  }
  return best;
}

bool LaneMap::off_all_lanes(const Eigen::Vector2d& pos, double factor) const {
  for (std::size_t i = 0; i < path_count(); ++i) {
    const LaneProjection proj = project_onto(i, pos);
    if (proj.distance <= factor * path(i).width) return false;
  }
  return true;
}

void LaneMap::validate() const {
  if (lanes.empty()) {
    throw std::invalid_argument("lane map: at least one lane required");
  }
  for (std::size_t i = 0; i < path_count(); ++i) {
    const Lane& lane = path(i);
    if (lane.centerline.size() < 2) {
      throw std::invalid_argument("lane map: centerline needs >= 2 points");
    }
    if (!(lane.width > 0.0)) {
      throw std::invalid_argument("lane map: lane width must be positive");
    }
    for (std::size_t j = 0; j + 1 < lane.centerline.size(); ++j) {
      if (segment_length(lane.centerline[j], lane.centerline[j + 1]) < 1e-9) {
        throw std::invalid_argument(
            "lane map: degenerate centerline segment (arc length must be "
            "monotone)");
      }
    }
  }
}

}  // namespace probe_mpc

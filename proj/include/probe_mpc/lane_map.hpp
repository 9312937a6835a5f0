#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace probe_mpc {

/// Directed centerline polyline with a lane width. Arc length is measured
/// along the polyline; queries extrapolate linearly beyond both ends so
/// vehicles can overrun the mapped road without snapping artifacts.
struct Lane {
  std::vector<Eigen::Vector2d> centerline;
  double width = 3.5;

  double length() const;
  /// Point at arc length s (extrapolated outside [0, length]).
  Eigen::Vector2d point_at(double s) const;
  /// Unit tangent at arc length s.
  Eigen::Vector2d tangent_at(double s) const;
  double heading_at(double s) const;
};

struct LaneProjection {
  int path_index = -1;   // index into LaneMap::path(): lanes then connectors
  double s = 0.0;        // arc length of the closest point
  double lateral = 0.0;  // signed offset, positive left of the tangent
  double distance = 0.0; // |lateral| for on-segment projections
  Eigen::Vector2d point = Eigen::Vector2d::Zero();
  Eigen::Vector2d tangent = Eigen::Vector2d::UnitX();
};

/// Road geometry: driving lanes plus optional intersection connector arcs.
class LaneMap {
 public:
  std::vector<Lane> lanes;
  std::vector<Lane> connectors;

  std::size_t path_count() const { return lanes.size() + connectors.size(); }
  /// Unified indexing: 0..lanes-1 are lanes, then connectors.
  const Lane& path(std::size_t index) const;
  bool is_connector(std::size_t index) const { return index >= lanes.size(); }

  /// Project onto one path.
  LaneProjection project_onto(std::size_t index, const Eigen::Vector2d& pos) const;
  /// Nearest path among all lanes and connectors.
  LaneProjection project(const Eigen::Vector2d& pos) const;

  /// Nearest lane (connectors excluded) other than `lane_index` whose
  /// centerline lies within `max_gap` of pos. Returns lane index or nullopt.
  std::optional<std::size_t> adjacent_lane(std::size_t lane_index,
                                           const Eigen::Vector2d& pos,
                                           double max_gap) const;

  /// True when pos is farther than factor * width from every centerline.
  bool off_all_lanes(const Eigen::Vector2d& pos, double factor = 1.5) const;

  void validate() const;  // throws std::invalid_argument on bad geometry
};

/// Projection of a point onto a bare polyline (used by Lane and tests).
LaneProjection project_polyline(const std::vector<Eigen::Vector2d>& polyline,
                                const Eigen::Vector2d& pos);

}  // namespace probe_mpc

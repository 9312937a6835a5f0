#pragma once

#include <Eigen/Core>
#include <array>

#include "probe_mpc/lane_map.hpp"
#include "probe_mpc/types.hpp"

namespace probe_mpc {

/// Corners of the vehicle footprint rectangle centered on the state.
std::array<Eigen::Vector2d, 4> footprint_corners(const AgentState& state,
                                                 double length, double width);

/// Oriented-rectangle overlap via the separating axis test. Symmetric;
/// false for disjoint boxes.
bool footprints_overlap(const AgentState& a, const AgentState& b,
                        double length, double width);

/// True when all four footprint corners lie within the lane's lateral
/// bounds.
bool footprint_inside_lane(const AgentState& state, const Lane& lane,
                           double length, double width);

}  // namespace probe_mpc

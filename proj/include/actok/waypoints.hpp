#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "actok/geometry.hpp"

namespace actok {

/// Reconstruction error budgets for waypoint extraction. Infinite values are
/// accepted and disable the corresponding channel.
struct WaypointThresholds {
  double pos_eps = 0.01;     // meters, point-to-line
  double rot_eps = 0.05;     // radians, geodesic after slerp
  double gripper_eps = 0.1;  // gripper opening, after linear interpolation

  void validate() const;
};

/// Sorted frame indices; always contains 0 and the last frame.
using WaypointIndexSet = std::vector<std::size_t>;

struct ChannelError {
  double pos = 0.0;
  double rot = 0.0;
};

/// Maximum interior deviation of frames i+1 .. j-1 from the interpolation
/// between frames i and j: point-to-line distance for position, distance to
/// the slerp at t = (k-i)/(j-i) for rotation. Throws if j <= i or j is out
/// of range.
ChannelError channel_error(std::span<const Pose> traj, std::size_t i, std::size_t j);

/// Largest |g_k - lerp(g_i, g_j, t_k)| over the interior frames.
double gripper_error(std::span<const double> gripper, std::size_t i, std::size_t j);

/// Shortest waypoint subsequence such that every segment stays inside the
/// thresholds on all of torso, left and right (position and rotation) and
/// both grippers at once. Among equally short solutions the one with the
/// smallest sum of per-segment normalized maximum errors wins; remaining
/// ties go to the earliest predecessor.
///
/// Exact dynamic program over frame pairs, O(n^3) worst case; failing
/// segments bail out at the first offending frame.
WaypointIndexSet extract_waypoints(std::span<const RobotState> traj, const WaypointThresholds& th);

/// Pose sequence of length `traj_len` interpolated between waypoint poses
/// (lerp for position, slerp for rotation); exact at the waypoints.
std::vector<Pose> reconstruct(std::size_t traj_len, const WaypointIndexSet& wps,
                              std::span<const Pose> poses_at_wps);

/// Whole-state version of reconstruct; grippers and timestamps are linearly
/// interpolated.
std::vector<RobotState> reconstruct_states(std::size_t traj_len, const WaypointIndexSet& wps,
                                           std::span<const RobotState> states_at_wps);

/// Per-channel pose sequence of a trajectory.
std::vector<Pose> channel_poses(std::span<const RobotState> traj, EndEffector e);

}  // namespace actok

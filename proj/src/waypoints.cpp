#include "actok/waypoints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "actok/error.hpp"

namespace actok {

void WaypointThresholds::validate() const {
  auto ok = [](double v) { return !std::isnan(v) && v > 0.0; };
  require(ok(pos_eps), "pos_eps must be > 0");
  require(ok(rot_eps), "rot_eps must be > 0");
  require(ok(gripper_eps), "gripper_eps must be > 0");
}

ChannelError channel_error(std::span<const Pose> traj, std::size_t i, std::size_t j) {
  require(j > i, "channel_error requires j > i");
  require(j < traj.size(), "channel_error index out of range");
  ChannelError e;
  const Pose& a = traj[i];
  const Pose& b = traj[j];
  const double span = static_cast<double>(j - i);
  for (std::size_t k = i + 1; k < j; ++k) {
    const double t = static_cast<double>(k - i) / span;
    e.pos = std::max(e.pos, point_to_line_distance(traj[k].position, a.position, b.position));
    e.rot = std::max(e.rot, rotation_distance(traj[k].orientation, slerp(a.orientation, b.orientation, t)));
  }
  return e;
}

double gripper_error(std::span<const double> gripper, std::size_t i, std::size_t j) {
  require(j > i && j < gripper.size(), "gripper_error index out of range");
  double e = 0.0;
  const double span = static_cast<double>(j - i);
  for (std::size_t k = i + 1; k < j; ++k) {
    const double t = static_cast<double>(k - i) / span;
    const double interp = gripper[i] + (gripper[j] - gripper[i]) * t;
    e = std::max(e, std::abs(gripper[k] - interp));
  }
  return e;
}

std::vector<Pose> channel_poses(std::span<const RobotState> traj, EndEffector e) {
  std::vector<Pose> out;
  out.reserve(traj.size());
  for (const auto& s : traj) out.push_back(s.pose(e));
  return out;
}

namespace {

// Normalized max error of segment (i, j) over every channel, or nullopt as
// soon as any frame breaks a threshold. Positions and grippers are checked
// first since they are cheap and reject most segments.
std::optional<double> segment_cost(std::span<const RobotState> traj, std::size_t i, std::size_t j,
                                   const WaypointThresholds& th) {
  const double span = static_cast<double>(j - i);
  double worst = 0.0;
  for (std::size_t k = i + 1; k < j; ++k) {
    const double t = static_cast<double>(k - i) / span;
    for (EndEffector e : kEndEffectors) {
      const double dp =
          point_to_line_distance(traj[k].pose(e).position, traj[i].pose(e).position, traj[j].pose(e).position);
      if (dp > th.pos_eps) return std::nullopt;
      worst = std::max(worst, dp / th.pos_eps);
    }
    const double gl = traj[i].left_gripper + (traj[j].left_gripper - traj[i].left_gripper) * t;
    const double gr = traj[i].right_gripper + (traj[j].right_gripper - traj[i].right_gripper) * t;
    const double dg = std::max(std::abs(traj[k].left_gripper - gl), std::abs(traj[k].right_gripper - gr));
    if (dg > th.gripper_eps) return std::nullopt;
    worst = std::max(worst, dg / th.gripper_eps);
  }
  for (EndEffector e : kEndEffectors) {
    const SlerpPath path(traj[i].pose(e).orientation, traj[j].pose(e).orientation);
    for (std::size_t k = i + 1; k < j; ++k) {
      const double t = static_cast<double>(k - i) / span;
      const double dr = rotation_distance(traj[k].pose(e).orientation, path.at(t));
      if (dr > th.rot_eps) return std::nullopt;
      worst = std::max(worst, dr / th.rot_eps);
    }
  }
  return worst;
}

}  // namespace

WaypointIndexSet extract_waypoints(std::span<const RobotState> traj, const WaypointThresholds& th) {
  th.validate();
  const std::size_t n = traj.size();
  require(n >= 2, "waypoint extraction needs at least 2 frames, got " + std::to_string(n));

  struct Cell {
    std::size_t count = std::numeric_limits<std::size_t>::max();
    double cost = 0.0;
    std::size_t prev = 0;
  };
  std::vector<Cell> best(n);
  best[0] = {1, 0.0, 0};
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const std::size_t count = best[i].count + 1;
      // Longer prefixes can't win; skip the O(n) scan.
      if (count > best[j].count) continue;
      const auto c = segment_cost(traj, i, j, th);
      if (!c) continue;
      const double cost = best[i].cost + *c;
      if (count < best[j].count || cost < best[j].cost) best[j] = {count, cost, i};
    }
  }

  WaypointIndexSet out;
  for (std::size_t k = n - 1;; k = best[k].prev) {
    out.push_back(k);
    if (k == 0) break;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Pose> reconstruct(std::size_t traj_len, const WaypointIndexSet& wps,
                              std::span<const Pose> poses_at_wps) {
  require(wps.size() == poses_at_wps.size(), "waypoint index and pose counts differ");
  require(wps.size() >= 1 && wps.front() == 0 && wps.back() + 1 == traj_len,
          "waypoints must start at frame 0 and end at the last frame");
  std::vector<Pose> out(traj_len);
  out[0] = poses_at_wps[0];
  for (std::size_t s = 0; s + 1 < wps.size(); ++s) {
    const std::size_t i = wps[s], j = wps[s + 1];
    require(j > i, "waypoint indices must be strictly increasing");
    const Pose& a = poses_at_wps[s];
    const Pose& b = poses_at_wps[s + 1];
    for (std::size_t k = i + 1; k <= j; ++k) {
      if (k == j) {
        out[k] = b;
        continue;
      }
      const double t = static_cast<double>(k - i) / static_cast<double>(j - i);
      out[k] = {a.position + (b.position - a.position) * t, slerp(a.orientation, b.orientation, t)};
    }
  }
  return out;
}

std::vector<RobotState> reconstruct_states(std::size_t traj_len, const WaypointIndexSet& wps,
                                           std::span<const RobotState> states_at_wps) {
  require(wps.size() == states_at_wps.size(), "waypoint index and state counts differ");
  std::vector<RobotState> out(traj_len);
  for (EndEffector e : kEndEffectors) {
    const auto poses = reconstruct(traj_len, wps, channel_poses(states_at_wps, e));
    for (std::size_t k = 0; k < traj_len; ++k) out[k].pose(e) = poses[k];
  }
  out[0].left_gripper = states_at_wps[0].left_gripper;
  out[0].right_gripper = states_at_wps[0].right_gripper;
  out[0].timestamp = states_at_wps[0].timestamp;
  for (std::size_t s = 0; s + 1 < wps.size(); ++s) {
    const std::size_t i = wps[s], j = wps[s + 1];
    const RobotState& a = states_at_wps[s];
    const RobotState& b = states_at_wps[s + 1];
    for (std::size_t k = i + 1; k <= j; ++k) {
      const double t = static_cast<double>(k - i) / static_cast<double>(j - i);
      RobotState& o = out[k];
      if (k == j) {
        o.left_gripper = b.left_gripper;
        o.right_gripper = b.right_gripper;
        o.timestamp = b.timestamp;
      } else {
        o.left_gripper = a.left_gripper + (b.left_gripper - a.left_gripper) * t;
        o.right_gripper = a.right_gripper + (b.right_gripper - a.right_gripper) * t;
        o.timestamp = a.timestamp + (b.timestamp - a.timestamp) * t;
      }
    }
  }
  return out;
}

}  // namespace actok

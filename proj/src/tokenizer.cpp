#include "actok/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "actok/error.hpp"
#include "actok/kmeans.hpp"

namespace actok {

namespace {

constexpr std::array<std::string_view, kSlotsPerStep> kChannelNames = {
    "torso_xyz", "torso_rot", "left_xyz", "left_rot", "left_grip", "right_xyz", "right_rot", "right_grip"};

struct SlotMap {
  TokenChannel xyz;
  TokenChannel rot;
};

SlotMap slots_of(EndEffector e) {
  switch (e) {
    case EndEffector::torso:
      return {TokenChannel::torso_xyz, TokenChannel::torso_rot};
    case EndEffector::left:
      return {TokenChannel::left_xyz, TokenChannel::left_rot};
    case EndEffector::right:
      break;
  }
  return {TokenChannel::right_xyz, TokenChannel::right_rot};
}

constexpr std::size_t slot(TokenChannel c) { return static_cast<std::size_t>(c); }

template <typename DistanceFn>
std::vector<RankedCandidate> rank(std::size_t size, std::size_t m, DistanceFn&& dist) {
  std::vector<RankedCandidate> all(size);
  for (std::size_t i = 0; i < size; ++i) all[i] = {static_cast<std::uint32_t>(i), dist(i)};
  m = std::min(m, size);
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m), all.end(),
                    [](const RankedCandidate& a, const RankedCandidate& b) {
                      return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
                    });
  all.resize(m);
  return all;
}

std::uint32_t pick(const std::vector<RankedCandidate>& ranked, EncodeMode mode, std::mt19937_64& rng) {
  if (mode == EncodeMode::greedy) return ranked.front().index;
  return ranked[rng() % ranked.size()].index;
}

}  // namespace

std::string_view channel_name(TokenChannel c) { return kChannelNames[slot(c)]; }

std::optional<TokenChannel> channel_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kChannelNames.size(); ++i)
    if (kChannelNames[i] == name) return static_cast<TokenChannel>(i);
  return std::nullopt;
}

void MotionTokenLibrary::validate() const {
  if (format_version != kLibraryFormatVersion) {
    fail(ErrorKind::version_mismatch, "library format_version " + std::to_string(format_version) +
                                          " is not supported (expected " +
                                          std::to_string(kLibraryFormatVersion) + ")");
  }
  require(composition_convention == kCompositionConvention,
          "unknown composition convention '" + composition_convention + "'");
  require(!trans_centroids.empty() && !rot_centroids.empty(), "motion token library is empty");
  require(gripper_levels >= 2 && gripper_levels <= 256, "gripper_levels must lie in [2, 256]");
  for (const auto& c : trans_centroids) require(c.finite(), "non-finite translation centroid");
  for (const auto& q : rot_centroids) {
    const auto v = q.wxyz();
    require(std::abs(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3] - 1.0) <= 1e-9 && v[0] >= 0.0,
            "rotation centroid is not a canonical unit quaternion");
  }
  thresholds.validate();
}

MotionTokenLibrary fit_library(std::span<const DeltaAction> deltas, const FitOptions& opt) {
  require(opt.k_trans >= 1 && opt.k_rot >= 1, "cluster counts must be >= 1");
  const std::size_t need = std::max(opt.k_trans, opt.k_rot);
  if (deltas.size() < need) {
    fail(ErrorKind::insufficient_data, "fitting the motion token library needs at least " + std::to_string(need) +
                                           " deltas, got " + std::to_string(deltas.size()));
  }
  opt.thresholds.validate();

  std::vector<Vec3> trans;
  std::vector<Rotation> rots;
  trans.reserve(deltas.size());
  rots.reserve(deltas.size());
  for (const auto& d : deltas) {
    require(d.d_pos.finite(), "non-finite delta translation");
    trans.push_back(d.d_pos);
    rots.push_back(d.d_rot);
  }

  MotionTokenLibrary lib;
  lib.fit_seed = opt.seed;
  lib.thresholds = opt.thresholds;
  // Distinct streams for the two channels, both derived from the one seed.
  auto kt = kmeans_translation(trans, {opt.k_trans, opt.seed, opt.max_iterations, opt.tolerance});
  auto kr = kmeans_rotation(rots, {opt.k_rot, opt.seed ^ 0x9e3779b97f4a7c15ULL, opt.max_iterations, opt.tolerance});
  lib.trans_centroids = std::move(kt.centroids);
  lib.rot_centroids = std::move(kr.centroids);

  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto near = nearest_tokens(lib, deltas[i], 1);
    lib.trans_radius = std::max(lib.trans_radius, near.trans.front().distance);
    lib.rot_radius = std::max(lib.rot_radius, near.rot.front().distance);
  }
  return lib;
}

std::vector<TokenId> ActionTokenSequence::tokens() const {
  std::vector<TokenId> out;
  out.reserve(token_count());
  for (const auto& s : steps)
    for (std::size_t i = 0; i < kSlotsPerStep; ++i) out.push_back({static_cast<TokenChannel>(i), s[i]});
  return out;
}

void ActionTokenSequence::validate() const {
  require(steps.size() <= kMaxSteps, "token sequence has more than " + std::to_string(kMaxSteps) + " steps");
  require(horizon_frames <= kMaxHorizonFrames, "token sequence horizon exceeds 40 frames");
  require(waypoint_frames.size() == steps.size(), "waypoint_frames must have one entry per step");
  std::uint32_t prev = 0;
  for (auto f : waypoint_frames) {
    require(f > prev, "waypoint_frames must be strictly increasing and positive");
    prev = f;
  }
  if (!steps.empty()) require(prev == horizon_frames, "last waypoint frame must equal horizon_frames");
  for (const auto& s : steps) {
    require(s[slot(TokenChannel::left_grip)] < 256 && s[slot(TokenChannel::right_grip)] < 256,
            "gripper level out of range");
  }
}

NearestTokens nearest_tokens(const MotionTokenLibrary& lib, const DeltaAction& target, std::size_t m) {
  require(m >= 1, "nearest_tokens needs m >= 1");
  NearestTokens out;
  out.trans = rank(lib.k_trans(), m, [&](std::size_t i) { return distance(lib.trans_centroids[i], target.d_pos); });
  out.rot = rank(lib.k_rot(), m, [&](std::size_t i) { return rotation_distance(lib.rot_centroids[i], target.d_rot); });
  return out;
}

std::uint32_t quantize_gripper(double g, std::uint32_t levels) {
  const double top = static_cast<double>(levels - 1);
  return static_cast<std::uint32_t>(std::lround(clamp_gripper(g) * top));
}

double dequantize_gripper(std::uint32_t level, std::uint32_t levels) {
  return static_cast<double>(level) / static_cast<double>(levels - 1);
}

ActionTokenSequence encode_window(std::span<const RobotState> traj, const MotionTokenLibrary& lib,
                                  const EncodeOptions& opt, const RobotState& start, std::mt19937_64& rng) {
  require(!lib.trans_centroids.empty() && !lib.rot_centroids.empty(), "cannot encode with an empty library");
  require(traj.size() >= 2, "encode window needs at least 2 frames");
  require(opt.horizon >= 1 && opt.horizon <= kMaxHorizonFrames, "horizon must lie in [1, 40]");
  require(opt.max_steps >= 1 && opt.max_steps <= kMaxSteps, "max_steps must lie in [1, 5]");

  const auto window = traj.first(std::min(traj.size(), opt.horizon + 1));
  auto wps = extract_waypoints(window, lib.thresholds);
  if (wps.size() > opt.max_steps + 1) wps.resize(opt.max_steps + 1);

  const std::size_t m = opt.mode == EncodeMode::greedy ? 1 : 3;
  ActionTokenSequence seq;
  seq.horizon_frames = static_cast<std::uint32_t>(wps.back());
  RobotState sim = start;
  for (std::size_t s = 1; s < wps.size(); ++s) {
    const RobotState& goal = window[wps[s]];
    TokenStep step{};
    for (EndEffector e : kEndEffectors) {
      Pose& cur = sim.pose(e);
      const Pose& from = opt.state_update ? cur : window[wps[s - 1]].pose(e);
      const auto near = nearest_tokens(lib, delta_between(from, goal.pose(e)), m);
      const std::uint32_t ti = pick(near.trans, opt.mode, rng);
      const std::uint32_t ri = pick(near.rot, opt.mode, rng);
      const auto [xyz, rot] = slots_of(e);
      step[slot(xyz)] = ti;
      step[slot(rot)] = ri;
      cur = apply_delta(cur, {lib.trans_centroids[ti], lib.rot_centroids[ri]});
    }
    step[slot(TokenChannel::left_grip)] = quantize_gripper(goal.left_gripper, lib.gripper_levels);
    step[slot(TokenChannel::right_grip)] = quantize_gripper(goal.right_gripper, lib.gripper_levels);
    sim.left_gripper = dequantize_gripper(step[slot(TokenChannel::left_grip)], lib.gripper_levels);
    sim.right_gripper = dequantize_gripper(step[slot(TokenChannel::right_grip)], lib.gripper_levels);
    seq.steps.push_back(step);
    seq.waypoint_frames.push_back(static_cast<std::uint32_t>(wps[s]));
  }
  return seq;
}

ActionTokenSequence encode(std::span<const RobotState> traj, const MotionTokenLibrary& lib, const EncodeOptions& opt,
                           const std::optional<RobotState>& start) {
  require(traj.size() >= 2, "encode window needs at least 2 frames");
  std::mt19937_64 rng(opt.seed);
  return encode_window(traj, lib, opt, start.value_or(traj.front()), rng);
}

std::vector<RobotState> decode(const ActionTokenSequence& seq, const MotionTokenLibrary& lib, const RobotState& start,
                               double frame_period) {
  require(seq.waypoint_frames.size() == seq.steps.size(), "waypoint_frames must have one entry per step");
  std::vector<RobotState> out;
  out.reserve(seq.steps.size() + 1);
  out.push_back(start);
  RobotState sim = start;
  for (std::size_t s = 0; s < seq.steps.size(); ++s) {
    const TokenStep& step = seq.steps[s];
    for (EndEffector e : kEndEffectors) {
      const auto [xyz, rot] = slots_of(e);
      const std::uint32_t ti = step[slot(xyz)];
      const std::uint32_t ri = step[slot(rot)];
      if (ti >= lib.k_trans() || ri >= lib.k_rot()) {
        fail(ErrorKind::validation, "token index out of range in step " + std::to_string(s) + " (" +
                                        std::string(channel_name(xyz)) + "=" + std::to_string(ti) + ", " +
                                        std::string(channel_name(rot)) + "=" + std::to_string(ri) + ")");
      }
      sim.pose(e) = apply_delta(sim.pose(e), {lib.trans_centroids[ti], lib.rot_centroids[ri]});
    }
    for (TokenChannel g : {TokenChannel::left_grip, TokenChannel::right_grip}) {
      if (step[slot(g)] >= lib.gripper_levels)
        fail(ErrorKind::validation, "gripper level out of range in step " + std::to_string(s));
    }
    sim.left_gripper = dequantize_gripper(step[slot(TokenChannel::left_grip)], lib.gripper_levels);
    sim.right_gripper = dequantize_gripper(step[slot(TokenChannel::right_grip)], lib.gripper_levels);
    sim.timestamp = start.timestamp + static_cast<double>(seq.waypoint_frames[s]) * frame_period;
    out.push_back(sim);
  }
  return out;
}

std::vector<RobotState> decode_frames(const ActionTokenSequence& seq, const MotionTokenLibrary& lib,
                                      const RobotState& start, double frame_period) {
  const auto states = decode(seq, lib, start, frame_period);
  if (seq.steps.empty()) return states;
  WaypointIndexSet wps{0};
  for (auto f : seq.waypoint_frames) wps.push_back(f);
  return reconstruct_states(seq.horizon_frames + 1, wps, states);
}

ReconstructionError window_reconstruction_error(std::span<const RobotState> traj, const ActionTokenSequence& seq,
                                                std::span<const RobotState> decoded) {
  require(decoded.size() == seq.steps.size() + 1, "decoded states must be start plus one per step");
  require(traj.size() > seq.horizon_frames, "trajectory shorter than the encoded horizon");
  ReconstructionError err;
  auto at_waypoint = [&](std::size_t frame, const RobotState& d) {
    for (EndEffector e : kEndEffectors) {
      err.pos = std::max(err.pos, distance(traj[frame].pose(e).position, d.pose(e).position));
      err.rot = std::max(err.rot, rotation_distance(traj[frame].pose(e).orientation, d.pose(e).orientation));
    }
  };
  at_waypoint(0, decoded[0]);
  std::size_t i = 0;
  for (std::size_t s = 0; s < seq.steps.size(); ++s) {
    const std::size_t j = seq.waypoint_frames[s];
    const RobotState& a = decoded[s];
    const RobotState& b = decoded[s + 1];
    for (std::size_t k = i + 1; k < j; ++k) {
      const double t = static_cast<double>(k - i) / static_cast<double>(j - i);
      for (EndEffector e : kEndEffectors) {
        const Pose& p = traj[k].pose(e);
        err.pos = std::max(err.pos, point_to_line_distance(p.position, a.pose(e).position, b.pose(e).position));
        err.rot = std::max(err.rot, rotation_distance(p.orientation,
                                                      slerp(a.pose(e).orientation, b.pose(e).orientation, t)));
      }
    }
    at_waypoint(j, b);
    i = j;
  }
  return err;
}

std::vector<WaypointIndexSet> plan_windows(std::span<const RobotState> traj, const WaypointThresholds& th,
                                           std::size_t horizon, std::size_t max_steps) {
  require(horizon >= 1 && max_steps >= 1, "horizon and max_steps must be >= 1");
  std::vector<WaypointIndexSet> out;
  if (traj.size() < 2) return out;
  std::size_t s = 0;
  while (s + 1 < traj.size()) {
    const std::size_t len = std::min(traj.size() - s, horizon + 1);
    auto wps = extract_waypoints(traj.subspan(s, len), th);
    if (wps.size() > max_steps + 1) wps.resize(max_steps + 1);
    for (auto& w : wps) w += s;
    s = wps.back();
    out.push_back(std::move(wps));
  }
  return out;
}

std::vector<DeltaAction> collect_deltas(std::span<const RobotState> traj, const WaypointThresholds& th,
                                        std::size_t horizon, std::size_t max_steps) {
  std::vector<DeltaAction> out;
  for (const auto& wps : plan_windows(traj, th, horizon, max_steps)) {
    for (std::size_t s = 1; s < wps.size(); ++s)
      for (EndEffector e : kEndEffectors)
        out.push_back(delta_between(traj[wps[s - 1]].pose(e), traj[wps[s]].pose(e)));
  }
  return out;
}

EncodedTrajectory encode_trajectory(std::span<const RobotState> traj, const MotionTokenLibrary& lib,
                                    const EncodeOptions& opt) {
  EncodedTrajectory enc;
  enc.frame_count = traj.size();
  if (traj.empty()) return enc;
  enc.start = traj.front();
  if (traj.size() >= 2) {
    enc.frame_period = (traj.back().timestamp - traj.front().timestamp) / static_cast<double>(traj.size() - 1);
  }
  std::mt19937_64 rng(opt.seed);
  RobotState sim = traj.front();
  std::size_t s = 0;
  while (s + 1 < traj.size()) {
    auto seq = encode_window(traj.subspan(s), lib, opt, sim, rng);
    sim = decode(seq, lib, sim, enc.frame_period).back();
    enc.window_starts.push_back(static_cast<std::uint32_t>(s));
    s += seq.horizon_frames;
    enc.windows.push_back(std::move(seq));
  }
  return enc;
}

std::vector<RobotState> decode_trajectory(const EncodedTrajectory& enc, const MotionTokenLibrary& lib) {
  std::vector<RobotState> out;
  if (enc.frame_count == 0) return out;
  out.reserve(enc.frame_count);
  out.push_back(enc.start);
  RobotState sim = enc.start;
  for (const auto& w : enc.windows) {
    auto frames = decode_frames(w, lib, sim, enc.frame_period);
    sim = frames.back();
    out.insert(out.end(), frames.begin() + 1, frames.end());
  }
  require(out.size() == enc.frame_count, "encoded windows do not cover the trajectory");
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k].timestamp = enc.start.timestamp + static_cast<double>(k) * enc.frame_period;
  return out;
}

}  // namespace actok

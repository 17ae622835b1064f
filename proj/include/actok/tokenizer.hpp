#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "actok/geometry.hpp"
#include "actok/waypoints.hpp"

namespace actok {

inline constexpr int kLibraryFormatVersion = 1;
inline constexpr std::size_t kSlotsPerStep = 8;
inline constexpr std::size_t kMaxHorizonFrames = 40;
inline constexpr std::size_t kMaxSteps = 5;

/// The k-means codebook of delta-action primitives. Translation and rotation
/// are clustered separately and shared by torso, left and right arm.
struct MotionTokenLibrary {
  int format_version = kLibraryFormatVersion;
  std::vector<Vec3> trans_centroids;
  std::vector<Rotation> rot_centroids;
  WaypointThresholds thresholds;
  std::uint64_t fit_seed = 0;
  std::string composition_convention = kCompositionConvention;
  std::uint32_t gripper_levels = 256;
  // Largest distance from any training delta to its nearest centroid.
  double trans_radius = 0.0;  // meters
  double rot_radius = 0.0;    // radians

  std::size_t k_trans() const { return trans_centroids.size(); }
  std::size_t k_rot() const { return rot_centroids.size(); }
  void validate() const;
};

struct FitOptions {
  std::size_t k_trans = 150;
  std::size_t k_rot = 150;
  std::uint64_t seed = 0;
  WaypointThresholds thresholds;  // recorded in the library for encode
  int max_iterations = 100;
  double tolerance = 1e-8;
};

/// Clusters translation and rotation parts of `deltas` independently.
/// Throws ErrorKind::insufficient_data when fewer than max(k_trans, k_rot)
/// deltas are supplied.
MotionTokenLibrary fit_library(std::span<const DeltaAction> deltas, const FitOptions& opt);

/// Slot order of one 8-token step.
enum class TokenChannel : std::uint8_t {
  torso_xyz,
  torso_rot,
  left_xyz,
  left_rot,
  left_grip,
  right_xyz,
  right_rot,
  right_grip,
};

std::string_view channel_name(TokenChannel c);
std::optional<TokenChannel> channel_from_name(std::string_view name);

struct TokenId {
  TokenChannel channel;
  std::uint32_t index;
  bool operator==(const TokenId&) const = default;
};

using TokenStep = std::array<std::uint32_t, kSlotsPerStep>;

/// One encoded window: up to five 8-slot steps, one per waypoint segment.
struct ActionTokenSequence {
  std::vector<TokenStep> steps;
  std::uint32_t horizon_frames = 0;
  // Frame offset (from the window start) reached by each step; the last one
  // equals horizon_frames.
  std::vector<std::uint32_t> waypoint_frames;

  std::size_t token_count() const { return steps.size() * kSlotsPerStep; }
  std::vector<TokenId> tokens() const;
  void validate() const;
  bool operator==(const ActionTokenSequence&) const = default;
};

struct RankedCandidate {
  std::uint32_t index;
  double distance;
};

struct NearestTokens {
  std::vector<RankedCandidate> trans;
  std::vector<RankedCandidate> rot;
};

/// The m closest translation centroids (Euclidean) and rotation centroids
/// (geodesic) to `target`, ranked independently, ties broken by index.
/// m is clamped to the library size.
NearestTokens nearest_tokens(const MotionTokenLibrary& lib, const DeltaAction& target, std::size_t m);

enum class EncodeMode { greedy, top3 };

struct EncodeOptions {
  EncodeMode mode = EncodeMode::greedy;
  std::uint64_t seed = 0;  // top3 sampling only
  std::size_t horizon = kMaxHorizonFrames;
  std::size_t max_steps = kMaxSteps;
  // Re-target each token from the simulated post-token state. Switching this
  // off encodes every segment from the true previous waypoint instead.
  bool state_update = true;
};

/// Encodes the window traj[0 .. min(horizon, n-1)].
///
/// Waypoints are extracted with the library's thresholds; at most
/// `max_steps` segments are kept and the horizon is cut at the last kept
/// waypoint. Each segment becomes one step: per end-effector the translation
/// and rotation tokens whose application to the simulated state lands
/// closest to the next waypoint (greedy) or a uniform pick among the three
/// closest (top3), and per arm the gripper level at that waypoint.
///
/// `start` is the simulated state the window begins from; it defaults to
/// traj[0].
ActionTokenSequence encode(std::span<const RobotState> traj, const MotionTokenLibrary& lib,
                           const EncodeOptions& opt, const std::optional<RobotState>& start = std::nullopt);

/// Same as encode, drawing top3 samples from a caller-owned generator.
ActionTokenSequence encode_window(std::span<const RobotState> traj, const MotionTokenLibrary& lib,
                                  const EncodeOptions& opt, const RobotState& start, std::mt19937_64& rng);

/// States after each step (start first). Timestamps advance by
/// `frame_period` per frame. Throws on an out-of-range token index.
std::vector<RobotState> decode(const ActionTokenSequence& seq, const MotionTokenLibrary& lib,
                               const RobotState& start, double frame_period = 1.0 / 30.0);

/// decode() interpolated back to one state per frame of the window.
std::vector<RobotState> decode_frames(const ActionTokenSequence& seq, const MotionTokenLibrary& lib,
                                      const RobotState& start, double frame_period = 1.0 / 30.0);

std::uint32_t quantize_gripper(double g, std::uint32_t levels);
double dequantize_gripper(std::uint32_t level, std::uint32_t levels);

/// Worst per-frame deviation of a decoded window from the frames it encodes.
/// Interior frames of each decoded segment are measured like channel_error
/// (point-to-line, slerp); waypoint frames by direct distance.
struct ReconstructionError {
  double pos = 0.0;
  double rot = 0.0;
};
ReconstructionError window_reconstruction_error(std::span<const RobotState> traj, const ActionTokenSequence& seq,
                                                std::span<const RobotState> decoded);

/// A whole trajectory encoded as a chain of windows. Each window starts at
/// the frame where the previous one ended and from the previous window's
/// simulated end state, so decoding the chain reproduces the encoder's
/// simulation exactly.
struct EncodedTrajectory {
  RobotState start;
  std::size_t frame_count = 0;
  double frame_period = 1.0 / 30.0;
  std::vector<std::uint32_t> window_starts;
  std::vector<ActionTokenSequence> windows;
};

EncodedTrajectory encode_trajectory(std::span<const RobotState> traj, const MotionTokenLibrary& lib,
                                    const EncodeOptions& opt);

/// Per-frame reconstruction of an encoded trajectory.
std::vector<RobotState> decode_trajectory(const EncodedTrajectory& enc, const MotionTokenLibrary& lib);

/// Waypoint segments a trajectory is split into by the encoder windowing,
/// as absolute frame indices per window.
std::vector<WaypointIndexSet> plan_windows(std::span<const RobotState> traj, const WaypointThresholds& th,
                                           std::size_t horizon = kMaxHorizonFrames,
                                           std::size_t max_steps = kMaxSteps);

/// True waypoint-to-waypoint deltas of every end-effector, collected with the
/// encoder's windowing; the training set for fit_library.
std::vector<DeltaAction> collect_deltas(std::span<const RobotState> traj, const WaypointThresholds& th,
                                        std::size_t horizon = kMaxHorizonFrames,
                                        std::size_t max_steps = kMaxSteps);

}  // namespace actok

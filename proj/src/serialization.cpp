#include "actok/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "actok/error.hpp"

namespace actok {

using nlohmann::json;

namespace {

double number(const json& j, const char* what) {
  if (!j.is_number()) fail(ErrorKind::validation, std::string("expected a number for '") + what + "'");
  return j.get<double>();
}

// Thresholds may be infinite, which JSON numbers cannot carry.
json threshold_to_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

double threshold_from_json(const json& j, const char* what) {
  if (j.is_string() && j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  return number(j, what);
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorKind::validation, std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json to_json(const Rotation& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

json to_json(const Pose& p) { return {{"p", to_json(p.position)}, {"q", to_json(p.orientation)}}; }

json to_json(const RobotState& s) {
  return {{"t", s.timestamp},
          {"torso", to_json(s.torso)},
          {"left", to_json(s.left)},
          {"right", to_json(s.right)},
          {"left_gripper", s.left_gripper},
          {"right_gripper", s.right_gripper}};
}

json to_json(const Episode& e) {
  json frames = json::array();
  for (const auto& f : e.frames) frames.push_back(to_json(f));
  return {{"format_version", kEpisodeFormatVersion},
          {"id", e.id},
          {"instruction", e.instruction},
          {"subtask", e.subtask},
          {"mirror_flag", e.mirror_flag},
          {"frames", std::move(frames)}};
}

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorKind::validation, "a position must be an array of 3 numbers");
  Vec3 v{number(j[0], "x"), number(j[1], "y"), number(j[2], "z")};
  require(v.finite(), "position has non-finite components");
  return v;
}

Rotation rotation_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) fail(ErrorKind::validation, "a quaternion must be an array [w, x, y, z]");
  return Rotation::from_wxyz(number(j[0], "w"), number(j[1], "x"), number(j[2], "y"), number(j[3], "z"));
}

Pose pose_from_json(const json& j) { return {vec3_from_json(field(j, "p")), rotation_from_json(field(j, "q"))}; }

RobotState state_from_json(const json& j) {
  RobotState s;
  s.timestamp = number(field(j, "t"), "t");
  s.torso = pose_from_json(field(j, "torso"));
  s.left = pose_from_json(field(j, "left"));
  s.right = pose_from_json(field(j, "right"));
  s.left_gripper = number(field(j, "left_gripper"), "left_gripper");
  s.right_gripper = number(field(j, "right_gripper"), "right_gripper");
  return s;
}

Episode episode_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::validation, "an episode must be a JSON object");
  const int version = field(j, "format_version").get<int>();
  if (version != kEpisodeFormatVersion)
    fail(ErrorKind::version_mismatch, "episode format_version " + std::to_string(version) + " is not supported");
  Episode e;
  e.id = field(j, "id").get<std::string>();
  e.instruction = field(j, "instruction").get<std::string>();
  e.subtask = field(j, "subtask").get<std::string>();
  e.mirror_flag = field(j, "mirror_flag").get<bool>();
  for (const auto& f : field(j, "frames")) e.frames.push_back(state_from_json(f));
  e.validate();
  return e;
}

json to_json(const MotionTokenLibrary& lib) {
  json trans = json::array();
  for (const auto& c : lib.trans_centroids) trans.push_back(to_json(c));
  json rot = json::array();
  for (const auto& c : lib.rot_centroids) rot.push_back(to_json(c));
  return {{"format_version", lib.format_version},
          {"kind", "motion_token_library"},
          {"fit_seed", lib.fit_seed},
          {"composition_convention", lib.composition_convention},
          {"thresholds",
           {{"pos_eps", threshold_to_json(lib.thresholds.pos_eps)},
            {"rot_eps", threshold_to_json(lib.thresholds.rot_eps)},
            {"gripper_eps", threshold_to_json(lib.thresholds.gripper_eps)}}},
          {"k_trans", lib.k_trans()},
          {"k_rot", lib.k_rot()},
          {"gripper_levels", lib.gripper_levels},
          {"quantization_radius", {{"translation", lib.trans_radius}, {"rotation", lib.rot_radius}}},
          {"trans_centroids", std::move(trans)},
          {"rot_centroids", std::move(rot)}};
}

MotionTokenLibrary library_from_json(const json& j) {
  try {
    MotionTokenLibrary lib;
    lib.format_version = field(j, "format_version").get<int>();
    if (lib.format_version != kLibraryFormatVersion) {
      fail(ErrorKind::version_mismatch, "library format_version " + std::to_string(lib.format_version) +
                                            " is not supported (expected " +
                                            std::to_string(kLibraryFormatVersion) + ")");
    }
    lib.fit_seed = field(j, "fit_seed").get<std::uint64_t>();
    lib.composition_convention = field(j, "composition_convention").get<std::string>();
    const json& th = field(j, "thresholds");
    lib.thresholds.pos_eps = threshold_from_json(field(th, "pos_eps"), "pos_eps");
    lib.thresholds.rot_eps = threshold_from_json(field(th, "rot_eps"), "rot_eps");
    lib.thresholds.gripper_eps = threshold_from_json(field(th, "gripper_eps"), "gripper_eps");
    lib.gripper_levels = field(j, "gripper_levels").get<std::uint32_t>();
    const json& rq = field(j, "quantization_radius");
    lib.trans_radius = number(field(rq, "translation"), "translation");
    lib.rot_radius = number(field(rq, "rotation"), "rotation");
    for (const auto& c : field(j, "trans_centroids")) lib.trans_centroids.push_back(vec3_from_json(c));
    for (const auto& c : field(j, "rot_centroids")) lib.rot_centroids.push_back(rotation_from_json(c));
    require(field(j, "k_trans").get<std::size_t>() == lib.k_trans(), "k_trans does not match centroid count");
    require(field(j, "k_rot").get<std::size_t>() == lib.k_rot(), "k_rot does not match centroid count");
    lib.validate();
    return lib;
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed library: ") + e.what());
  }
}

json to_json(const ActionTokenSequence& seq) {
  json channels = json::array();
  for (std::size_t i = 0; i < kSlotsPerStep; ++i) channels.push_back(channel_name(static_cast<TokenChannel>(i)));
  json steps = json::array();
  for (const auto& s : seq.steps) steps.push_back(json(std::vector<std::uint32_t>(s.begin(), s.end())));
  return {{"horizon_frames", seq.horizon_frames},
          {"waypoint_frames", seq.waypoint_frames},
          {"channels", std::move(channels)},
          {"steps", std::move(steps)}};
}

ActionTokenSequence sequence_from_json(const json& j) {
  ActionTokenSequence seq;
  seq.horizon_frames = field(j, "horizon_frames").get<std::uint32_t>();
  seq.waypoint_frames = field(j, "waypoint_frames").get<std::vector<std::uint32_t>>();
  const auto& channels = field(j, "channels");
  require(channels.is_array() && channels.size() == kSlotsPerStep, "token sequence needs 8 channel tags");
  for (std::size_t i = 0; i < kSlotsPerStep; ++i) {
    const auto c = channel_from_name(channels[i].get<std::string>());
    require(c && static_cast<std::size_t>(*c) == i, "channel tags are not in the 8-slot layout order");
  }
  for (const auto& s : field(j, "steps")) {
    require(s.is_array() && s.size() == kSlotsPerStep, "each step must hold 8 tokens");
    TokenStep step{};
    for (std::size_t i = 0; i < kSlotsPerStep; ++i) step[i] = s[i].get<std::uint32_t>();
    seq.steps.push_back(step);
  }
  seq.validate();
  return seq;
}

json to_json(const EncodedTrajectory& enc) {
  json windows = json::array();
  for (const auto& w : enc.windows) windows.push_back(to_json(w));
  return {{"start", to_json(enc.start)},
          {"frame_count", enc.frame_count},
          {"frame_period", enc.frame_period},
          {"window_starts", enc.window_starts},
          {"windows", std::move(windows)}};
}

EncodedTrajectory encoded_from_json(const json& j) {
  EncodedTrajectory enc;
  enc.frame_count = field(j, "frame_count").get<std::size_t>();
  enc.frame_period = number(field(j, "frame_period"), "frame_period");
  if (enc.frame_count > 0) enc.start = state_from_json(field(j, "start"));
  enc.window_starts = field(j, "window_starts").get<std::vector<std::uint32_t>>();
  for (const auto& w : field(j, "windows")) enc.windows.push_back(sequence_from_json(w));
  require(enc.window_starts.size() == enc.windows.size(), "window_starts and windows differ in length");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < enc.windows.size(); ++i) {
    require(enc.window_starts[i] == covered, "windows are not contiguous");
    covered += enc.windows[i].horizon_frames;
  }
  require(enc.frame_count == 0 || covered + 1 == enc.frame_count, "windows do not cover frame_count frames");
  return enc;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open '" + tmp + "' for writing");
    out << contents;
    out.flush();
    if (!out) fail(ErrorKind::io, "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::io, "cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

void save_library(const std::string& path, const MotionTokenLibrary& lib) {
  write_file_atomic(path, to_json(lib).dump(1) + "\n");
}

MotionTokenLibrary load_library(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, "library '" + path + "' is not valid JSON: " + e.what());
  }
  return library_from_json(j);
}

}  // namespace actok

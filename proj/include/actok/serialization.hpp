#pragma once

#include <string>

#include <json.hpp>

#include "actok/episode.hpp"
#include "actok/geometry.hpp"
#include "actok/tokenizer.hpp"

namespace actok {

// JSON mappings for the file formats. Doubles are written by nlohmann/json as
// shortest round-trip decimals, so every value reads back bit-identical.

nlohmann::json to_json(const Vec3& v);
nlohmann::json to_json(const Rotation& q);
nlohmann::json to_json(const Pose& p);
nlohmann::json to_json(const RobotState& s);
nlohmann::json to_json(const Episode& e);
nlohmann::json to_json(const MotionTokenLibrary& lib);
nlohmann::json to_json(const ActionTokenSequence& seq);
nlohmann::json to_json(const EncodedTrajectory& enc);

Vec3 vec3_from_json(const nlohmann::json& j);
Rotation rotation_from_json(const nlohmann::json& j);
Pose pose_from_json(const nlohmann::json& j);
RobotState state_from_json(const nlohmann::json& j);
Episode episode_from_json(const nlohmann::json& j);
MotionTokenLibrary library_from_json(const nlohmann::json& j);
ActionTokenSequence sequence_from_json(const nlohmann::json& j);
EncodedTrajectory encoded_from_json(const nlohmann::json& j);

void save_library(const std::string& path, const MotionTokenLibrary& lib);
MotionTokenLibrary load_library(const std::string& path);

/// Writes to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace actok

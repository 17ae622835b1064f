#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "actok/rewards.hpp"

namespace actok {

// Batch reward scoring over JSONL files.
//
// Ground-truth record:
//   {"id", "mode": "full"|"partial", "instruction", "image", "reasoning",
//    "bbox": [x0, y0, x1, y1], "region": [x0, y0, x1, y1],
//    "waypoints": {"left": [[u, v], ...], "right": [...]}, "action": {...}}
// Prediction record:
//   {"id", "gt", "group", "text", "reasoning", "bbox", "keypoints": [[u, v], ...],
//    "waypoints", "action"}
// "action" holds torso_xyz, torso_rot, left_xyz, left_rot, left_gripper,
// right_xyz, right_rot, right_gripper (rotations as [w, x, y, z]). "bbox" on the
// ground truth marks a pick-phase sample and "region" a place-phase one; both
// are optional, as are "reasoning", "group" and everything a model may fail to
// emit. A missing prediction field scores 0 on its component.

struct GroundTruthRecord {
  std::string id;
  ReasoningMode mode = ReasoningMode::full;
  std::string instruction;
  std::string image;
  std::optional<std::string> reasoning;
  std::optional<BBox> bbox;
  std::optional<BBox> region;
  std::vector<Trajectory2D> waypoints;  // left, right
  ActionVector8 action;
};

struct PredictionRecord {
  std::string id;
  std::string gt;
  std::optional<std::string> group;
  std::string text;
  std::optional<std::string> reasoning;
  std::optional<BBox> bbox;
  std::vector<Point2> keypoints;
  std::vector<Trajectory2D> waypoints;
  std::optional<ActionVector8> action;
};

struct RewardReport {
  std::string id;
  std::string gt;
  ReasoningMode mode = ReasoningMode::full;
  std::optional<std::string> group;
  RewardComponents rewards;
  double total = 0.0;
  std::optional<double> advantage;  // only for groups of two or more
};

GroundTruthRecord ground_truth_from_json(const nlohmann::json& j);
PredictionRecord prediction_from_json(const nlohmann::json& j);
ActionVector8 action_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ActionVector8& a);
nlohmann::json to_json(const RewardReport& r);

std::vector<GroundTruthRecord> read_ground_truth(const std::string& path);
std::vector<PredictionRecord> read_predictions(const std::string& path);

struct ScoreOptions {
  RewardWeights weights;
  ConsistencyJudge* judge = nullptr;  // no consistency reward when null
  unsigned threads = 1;
  double advantage_eps = 1e-8;
};

/// One report per prediction, in input order.
std::vector<RewardReport> score_batch(const std::vector<PredictionRecord>& preds,
                                      const std::vector<GroundTruthRecord>& gts, const ScoreOptions& opt);

/// Per-component mean / population std per mode and, when a baseline scored on
/// the same prediction ids is given, NSR of these reports against it. Absent
/// cells are "-".
std::string summary_csv(const std::vector<RewardReport>& reports,
                        const std::vector<RewardReport>* baseline = nullptr);

}  // namespace actok

#pragma once

#include <array>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "actok/geometry.hpp"

namespace actok {

struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
  void validate() const;
};

/// Normalized image coordinates.
struct Point2 {
  double u = 0.0;
  double v = 0.0;
};

using Trajectory2D = std::vector<Point2>;

/// One final-timestep action in the 8-slot layout.
struct ActionVector8 {
  Vec3 torso_xyz;
  Rotation torso_rot;
  Vec3 left_xyz;
  Rotation left_rot;
  double left_gripper = 0.0;
  Vec3 right_xyz;
  Rotation right_rot;
  double right_gripper = 0.0;
};

struct RewardWeights {
  double goal = 0.5;  // waypoint reward split
  double traj = 0.5;
  double text = 0.5;  // consistency split
  double text_spatial = 0.5;
  // Per-slot action weights and decay rates, slots in layout order.
  std::array<double, 8> action_w = {0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125};
  std::array<double, 8> action_k = {10.0, 2.0, 10.0, 2.0, 5.0, 10.0, 2.0, 5.0};
  double format = 0.1;
  // Divide the DTW alignment cost by the alignment length.
  bool dtw_normalize = true;

  void validate() const;
};

double r_bbox(const BBox& pred, const BBox& gt);

/// Fraction of keypoints inside `region`, edges included.
double r_keypoint(std::span<const Point2> preds, const BBox& region);

struct DtwAlignment {
  double cost = 0.0;             // summed Euclidean distances along the path
  std::size_t path_length = 0;   // number of matched pairs
};

/// Minimum-cost monotone alignment; among equal costs the shortest path wins.
DtwAlignment dtw_align(std::span<const Point2> a, std::span<const Point2> b);

/// Alignment cost, divided by the path length when `normalize` is set.
double dtw(std::span<const Point2> a, std::span<const Point2> b, bool normalize = true);

double r_goal(std::span<const Point2> pred, std::span<const Point2> gt);
double r_traj(std::span<const Point2> pred, std::span<const Point2> gt, bool normalize = true);

/// Per-arm goal/trajectory blend averaged over arms.
double r_waypoint(std::span<const Trajectory2D> pred, std::span<const Trajectory2D> gt,
                  const RewardWeights& w = {});

/// Per-slot errors: Euclidean for translations, geodesic angle for rotations,
/// absolute difference for grippers.
std::array<double, 8> action_errors(const ActionVector8& pred, const ActionVector8& gt);
double r_action(const ActionVector8& pred, const ActionVector8& gt, const RewardWeights& w = {});

class FormatTemplate {
 public:
  FormatTemplate(std::string name, std::string pattern);
  const std::string& name() const { return name_; }
  const std::string& pattern() const { return pattern_; }
  bool matches(const std::string& output) const;

 private:
  std::string name_;
  std::string pattern_;
  std::regex re_;
};

enum class ReasoningMode { full, partial };
std::string_view mode_name(ReasoningMode m);
ReasoningMode mode_from_name(std::string_view s);

/// Templates shipped with the toolkit, one per reasoning mode.
const FormatTemplate& default_template(ReasoningMode m);

double r_format(const std::string& output, const FormatTemplate& tmpl);

struct JudgeRequest {
  std::string image_ref;
  std::string instruction;
  std::string gt_text;
  std::string parsed_output;
};

struct JudgeResponse {
  double r_text = 0.0;
  double r_text_spatial = 0.0;
};

/// Scores reasoning text. Implementations either tolerate concurrent calls or
/// report single_flight() so callers serialize them. Failures are thrown.
class ConsistencyJudge {
 public:
  virtual ~ConsistencyJudge() = default;
  virtual JudgeResponse judge(const JudgeRequest& req) = 0;
  virtual bool single_flight() const { return false; }
};

/// Deterministic stand-in: word-set Jaccard for text, and IoU between the
/// first "[a, b, c, d]" box in each text for spatial consistency (1 if neither
/// has a box, 0 if only one does).
class MockJudge : public ConsistencyJudge {
 public:
  JudgeResponse judge(const JudgeRequest& req) override;
};

double r_consistency(ConsistencyJudge& judge, const JudgeRequest& req, const RewardWeights& w = {});

struct RewardComponents {
  std::optional<double> bbox;
  std::optional<double> keypoint;
  std::optional<double> waypoint;
  std::optional<double> action;
  std::optional<double> consistency;
  std::optional<double> format;
};

/// Format at weight w.format plus the remaining weight shared equally by the
/// other components present. Full mode needs waypoint, action, format and one
/// of bbox/keypoint; partial needs action and format and ignores the visual
/// components.
double total_reward(const RewardComponents& c, ReasoningMode mode, const RewardWeights& w = {});

/// z-scores with the population standard deviation; all zeros when the
/// standard deviation is below `eps`.
std::vector<double> grpo_advantages(std::span<const double> rewards, double eps = 1e-8);

struct GrpoConfig {
  double beta = 0.04;
  double eps_low = 0.2;
  double eps_high = 0.28;
};

/// Mean over the group of min(r A, clip(r, 1 - eps_low, 1 + eps_high) A) - beta kl.
double grpo_objective(std::span<const double> ratios, std::span<const double> advantages,
                      std::span<const double> kl, const GrpoConfig& cfg = {});

/// (wins - losses) / total, comparing ours[i] against base[i].
double nsr(std::span<const double> ours, std::span<const double> base);

/// Indices of groups whose reward population std is at least `min_std`.
std::vector<std::size_t> variance_filter(std::span<const std::vector<double>> groups, double min_std);

}  // namespace actok

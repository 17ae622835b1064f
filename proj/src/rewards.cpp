#include "actok/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

#include "actok/error.hpp"

namespace actok {

namespace {

double dist(const Point2& a, const Point2& b) { return std::hypot(a.u - b.u, a.v - b.v); }

double sq_dist(const Point2& a, const Point2& b) {
  const double du = a.u - b.u, dv = a.v - b.v;
  return du * du + dv * dv;
}

bool unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

double population_std(std::span<const double> xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::set<std::string> words(const std::string& s) {
  std::set<std::string> out;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.insert(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(cur);
  return out;
}

std::optional<BBox> first_box(const std::string& s) {
  static const std::regex re(
      R"(\[\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*\])");
  std::smatch m;
  if (!std::regex_search(s, m, re)) return std::nullopt;
  BBox b{std::stod(m[1]), std::stod(m[2]), std::stod(m[3]), std::stod(m[4])};
  if (b.x_min > b.x_max || b.y_min > b.y_max) return std::nullopt;
  return b;
}

// Pieces of the bundled output templates.
const std::string kText = R"([^<]+)";
const std::string kNum = R"(-?\d+(?:\.\d+)?)";
const std::string kBox = R"(\[\s*)" + kNum + R"(\s*,\s*)" + kNum + R"(\s*,\s*)" + kNum + R"(\s*,\s*)" + kNum + R"(\s*\])";
const std::string kPt = R"(\(\s*)" + kNum + R"(\s*,\s*)" + kNum + R"(\s*\))";
const std::string kPts = R"(\[\s*)" + kPt + R"((?:\s*,\s*)" + kPt + R"()*\s*\])";
const std::string kTokens = R"(\s*\d+(?:\s+\d+)*\s*)";

}  // namespace

void BBox::validate() const {
  require(std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max),
          "bbox has non-finite coordinates");
  require(x_min <= x_max && y_min <= y_max, "bbox min corner exceeds max corner");
}

void RewardWeights::validate() const {
  for (double v : {goal, traj, text, text_spatial, format}) require(v >= 0.0 && std::isfinite(v), "reward weights must be >= 0");
  require(format <= 1.0, "format weight must be <= 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    require(action_w[i] >= 0.0 && std::isfinite(action_w[i]), "action weights must be >= 0");
    require(action_k[i] >= 0.0 && std::isfinite(action_k[i]), "action decay rates must be >= 0");
    sum += action_w[i];
  }
  require(std::abs(sum - 1.0) <= 1e-9, "action weights must sum to 1");
  require(std::abs(goal + traj - 1.0) <= 1e-9, "waypoint split must sum to 1");
  require(std::abs(text + text_spatial - 1.0) <= 1e-9, "consistency split must sum to 1");
}

double r_bbox(const BBox& pred, const BBox& gt) {
  pred.validate();
  gt.validate();
  const double iw = std::max(0.0, std::min(pred.x_max, gt.x_max) - std::max(pred.x_min, gt.x_min));
  const double ih = std::max(0.0, std::min(pred.y_max, gt.y_max) - std::max(pred.y_min, gt.y_min));
  const double inter = iw * ih;
  const double uni = pred.area() + gt.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double r_keypoint(std::span<const Point2> preds, const BBox& region) {
  region.validate();
  require(!preds.empty(), "keypoint reward needs at least one keypoint");
  std::size_t inside = 0;
  for (const auto& k : preds) {
    if (k.u >= region.x_min && k.u <= region.x_max && k.v >= region.y_min && k.v <= region.y_max) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(preds.size());
}

DtwAlignment dtw_align(std::span<const Point2> a, std::span<const Point2> b) {
  require(!a.empty() && !b.empty(), "dtw needs two non-empty sequences");
  const std::size_t n = a.size(), m = b.size();
  std::vector<DtwAlignment> cell(n * m);
  auto at = [&](std::size_t i, std::size_t j) -> DtwAlignment& { return cell[i * m + j]; };
  auto better = [](const DtwAlignment& x, const DtwAlignment& y) {
    return x.cost < y.cost || (x.cost == y.cost && x.path_length < y.path_length);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = dist(a[i], b[j]);
      if (i == 0 && j == 0) {
        at(i, j) = {d, 1};
        continue;
      }
      DtwAlignment best{std::numeric_limits<double>::infinity(), 0};
      if (i > 0 && j > 0 && better(at(i - 1, j - 1), best)) best = at(i - 1, j - 1);
      if (i > 0 && better(at(i - 1, j), best)) best = at(i - 1, j);
      if (j > 0 && better(at(i, j - 1), best)) best = at(i, j - 1);
      at(i, j) = {best.cost + d, best.path_length + 1};
    }
  }
  return at(n - 1, m - 1);
}

double dtw(std::span<const Point2> a, std::span<const Point2> b, bool normalize) {
  const auto al = dtw_align(a, b);
  return normalize ? al.cost / static_cast<double>(al.path_length) : al.cost;
}

double r_goal(std::span<const Point2> pred, std::span<const Point2> gt) {
  require(!pred.empty() && !gt.empty(), "waypoint reward needs non-empty trajectories");
  return 0.5 * (std::max(0.0, 1.0 - sq_dist(gt.front(), pred.front())) +
                std::max(0.0, 1.0 - sq_dist(gt.back(), pred.back())));
}

double r_traj(std::span<const Point2> pred, std::span<const Point2> gt, bool normalize) {
  return std::max(0.0, 1.0 - dtw(gt, pred, normalize));
}

double r_waypoint(std::span<const Trajectory2D> pred, std::span<const Trajectory2D> gt, const RewardWeights& w) {
  require(pred.size() == gt.size(), "waypoint reward needs the same arms in prediction and ground truth");
  require(!gt.empty(), "waypoint reward needs at least one arm");
  double s = 0.0;
  for (std::size_t a = 0; a < gt.size(); ++a)
    s += w.goal * r_goal(pred[a], gt[a]) + w.traj * r_traj(pred[a], gt[a], w.dtw_normalize);
  return std::clamp(s / static_cast<double>(gt.size()), 0.0, 1.0);
}

std::array<double, 8> action_errors(const ActionVector8& p, const ActionVector8& g) {
  return {distance(p.torso_xyz, g.torso_xyz),
          rotation_distance(p.torso_rot, g.torso_rot),
          distance(p.left_xyz, g.left_xyz),
          rotation_distance(p.left_rot, g.left_rot),
          std::abs(p.left_gripper - g.left_gripper),
          distance(p.right_xyz, g.right_xyz),
          rotation_distance(p.right_rot, g.right_rot),
          std::abs(p.right_gripper - g.right_gripper)};
}

double r_action(const ActionVector8& pred, const ActionVector8& gt, const RewardWeights& w) {
  const auto f = action_errors(pred, gt);
  double s = 0.0;
  for (std::size_t i = 0; i < 8; ++i) s += w.action_w[i] * std::exp(-w.action_k[i] * f[i]);
  return std::clamp(s, 0.0, 1.0);
}

FormatTemplate::FormatTemplate(std::string name, std::string pattern)
    : name_(std::move(name)), pattern_(std::move(pattern)) {
  try {
    re_ = std::regex(pattern_, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    fail(ErrorKind::validation, "format template '" + name_ + "' does not compile: " + e.what());
  }
}

bool FormatTemplate::matches(const std::string& output) const { return std::regex_match(output, re_); }

std::string_view mode_name(ReasoningMode m) { return m == ReasoningMode::full ? "full" : "partial"; }

ReasoningMode mode_from_name(std::string_view s) {
  if (s == "full") return ReasoningMode::full;
  if (s == "partial") return ReasoningMode::partial;
  fail(ErrorKind::validation, "unknown reasoning mode '" + std::string(s) + "'");
}

const FormatTemplate& default_template(ReasoningMode m) {
  static const FormatTemplate full(
      "full", R"(\s*<think>)" + kText + R"(</think>\s*<subtask>)" + kText + R"(</subtask>\s*(?:<bbox>\s*)" + kBox +
                  R"(\s*</bbox>|<keypoints>\s*)" + kPts + R"(\s*</keypoints>)\s*<trajectory>\s*left:\s*)" + kPts +
                  R"(\s*;\s*right:\s*)" + kPts + R"(\s*</trajectory>\s*<action>)" + kTokens + R"(</action>\s*)");
  static const FormatTemplate partial(
      "partial", R"(\s*<subtask>)" + kText + R"(</subtask>\s*<action>)" + kTokens + R"(</action>\s*)");
  return m == ReasoningMode::full ? full : partial;
}

double r_format(const std::string& output, const FormatTemplate& tmpl) { return tmpl.matches(output) ? 1.0 : 0.0; }

JudgeResponse MockJudge::judge(const JudgeRequest& req) {
  JudgeResponse r;
  const auto a = words(req.gt_text), b = words(req.parsed_output);
  if (a.empty() && b.empty()) {
    r.r_text = 1.0;
  } else {
    std::size_t common = 0;
    for (const auto& w : a) common += b.count(w);
    r.r_text = static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
  }
  const auto ga = first_box(req.gt_text), gb = first_box(req.parsed_output);
  if (!ga && !gb) {
    r.r_text_spatial = 1.0;
  } else if (ga && gb) {
    r.r_text_spatial = r_bbox(*gb, *ga);
  } else {
    r.r_text_spatial = 0.0;
  }
  return r;
}

double r_consistency(ConsistencyJudge& judge, const JudgeRequest& req, const RewardWeights& w) {
  const JudgeResponse r = judge.judge(req);
  if (!unit_interval(r.r_text) || !unit_interval(r.r_text_spatial))
    fail(ErrorKind::judge, "judge returned scores outside [0, 1]");
  return w.text * r.r_text + w.text_spatial * r.r_text_spatial;
}

double total_reward(const RewardComponents& c, ReasoningMode mode, const RewardWeights& w) {
  auto check = [](const std::optional<double>& v, const char* name) {
    if (v) require(unit_interval(*v), std::string(name) + " reward outside [0, 1]");
  };
  check(c.bbox, "bbox");
  check(c.keypoint, "keypoint");
  check(c.waypoint, "waypoint");
  check(c.action, "action");
  check(c.consistency, "consistency");
  check(c.format, "format");
  require(c.action.has_value(), "action reward is required");
  require(c.format.has_value(), "format reward is required");

  std::vector<double> rest;
  if (mode == ReasoningMode::full) {
    require(c.waypoint.has_value(), "full mode requires the waypoint reward");
    require(c.bbox || c.keypoint, "full mode requires a bbox or keypoint reward");
    if (c.bbox) rest.push_back(*c.bbox);
    if (c.keypoint) rest.push_back(*c.keypoint);
    rest.push_back(*c.waypoint);
  }
  rest.push_back(*c.action);
  if (c.consistency) rest.push_back(*c.consistency);
  return std::clamp(w.format * *c.format + (1.0 - w.format) * mean_of(rest), 0.0, 1.0);
}

std::vector<double> grpo_advantages(std::span<const double> rewards, double eps) {
  require(rewards.size() >= 2, "GRPO needs a group of at least 2 rewards");
  for (double r : rewards) require(std::isfinite(r), "rewards must be finite");
  const double mean = mean_of(rewards);
  const double sd = population_std(rewards, mean);
  std::vector<double> out(rewards.size(), 0.0);
  if (sd < eps) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

double grpo_objective(std::span<const double> ratios, std::span<const double> advantages, std::span<const double> kl,
                      const GrpoConfig& cfg) {
  require(ratios.size() == advantages.size() && ratios.size() == kl.size(),
          "ratios, advantages and kl must have equal length");
  require(!ratios.empty(), "GRPO objective needs a non-empty group");
  require(cfg.eps_low >= 0.0 && cfg.eps_high >= 0.0, "clip bounds must be >= 0");
  double s = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double clipped = std::clamp(ratios[i], 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
    s += std::min(ratios[i] * advantages[i], clipped * advantages[i]) - cfg.beta * kl[i];
  }
  return s / static_cast<double>(ratios.size());
}

double nsr(std::span<const double> ours, std::span<const double> base) {
  require(ours.size() == base.size(), "NSR needs paired scores");
  require(!ours.empty(), "NSR needs at least one pair");
  long net = 0;
  for (std::size_t i = 0; i < ours.size(); ++i) {
    if (ours[i] > base[i]) ++net;
    if (ours[i] < base[i]) --net;
  }
  return static_cast<double>(net) / static_cast<double>(ours.size());
}

std::vector<std::size_t> variance_filter(std::span<const std::vector<double>> groups, double min_std) {
  std::vector<std::size_t> keep;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) continue;
    if (population_std(groups[g], mean_of(groups[g])) >= min_std) keep.push_back(g);
  }
  return keep;
}

}  // namespace actok

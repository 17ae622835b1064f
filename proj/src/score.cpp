#include "actok/score.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>

#include "actok/error.hpp"
#include "actok/parallel.hpp"
#include "actok/serialization.hpp"

namespace actok {

using nlohmann::json;

namespace {

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

const json& need(const json& j, const char* key) {
  const json* v = find(j, key);
  if (!v) fail(ErrorKind::validation, std::string("missing field '") + key + "'");
  return *v;
}

BBox bbox_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) fail(ErrorKind::validation, "a box must be [x_min, y_min, x_max, y_max]");
  BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  b.validate();
  return b;
}

Point2 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) fail(ErrorKind::validation, "a point must be [u, v]");
  Point2 p{j[0].get<double>(), j[1].get<double>()};
  require(std::isfinite(p.u) && std::isfinite(p.v), "point has non-finite coordinates");
  return p;
}

std::vector<Point2> points_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorKind::validation, "expected an array of points");
  std::vector<Point2> out;
  for (const auto& p : j) out.push_back(point_from_json(p));
  return out;
}

std::vector<Trajectory2D> arms_from_json(const json& j) {
  return {points_from_json(need(j, "left")), points_from_json(need(j, "right"))};
}

double gripper_from_json(const json& j, const char* key) {
  const double g = need(j, key).get<double>();
  require(g >= 0.0 && g <= 1.0, std::string(key) + " must lie in [0, 1]");
  return g;
}

template <typename Record, typename Parse>
std::vector<Record> read_jsonl(const std::string& path, Parse parse) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "' for reading");
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::exception& e) {
      fail(ErrorKind::validation, path + ": line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.kind(), path + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  const json* v = find(j, key);
  if (!v) return std::nullopt;
  return v->get<std::string>();
}

std::string cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

using Getter = std::function<std::optional<double>(const RewardReport&)>;

struct Row {
  const char* name;
  Getter get;
};

const std::vector<Row>& rows() {
  static const std::vector<Row> r = {
      {"total reward", [](const RewardReport& x) { return std::optional<double>(x.total); }},
      {"bbox reward", [](const RewardReport& x) { return x.rewards.bbox; }},
      {"keypoint reward", [](const RewardReport& x) { return x.rewards.keypoint; }},
      {"waypoint reward", [](const RewardReport& x) { return x.rewards.waypoint; }},
      {"action reward", [](const RewardReport& x) { return x.rewards.action; }},
      {"consistency reward", [](const RewardReport& x) { return x.rewards.consistency; }},
      {"format reward", [](const RewardReport& x) { return x.rewards.format; }},
  };
  return r;
}

}  // namespace

ActionVector8 action_from_json(const json& j) {
  ActionVector8 a;
  a.torso_xyz = vec3_from_json(need(j, "torso_xyz"));
  a.torso_rot = rotation_from_json(need(j, "torso_rot"));
  a.left_xyz = vec3_from_json(need(j, "left_xyz"));
  a.left_rot = rotation_from_json(need(j, "left_rot"));
  a.left_gripper = gripper_from_json(j, "left_gripper");
  a.right_xyz = vec3_from_json(need(j, "right_xyz"));
  a.right_rot = rotation_from_json(need(j, "right_rot"));
  a.right_gripper = gripper_from_json(j, "right_gripper");
  return a;
}

json to_json(const ActionVector8& a) {
  return {{"torso_xyz", to_json(a.torso_xyz)},   {"torso_rot", to_json(a.torso_rot)},
          {"left_xyz", to_json(a.left_xyz)},     {"left_rot", to_json(a.left_rot)},
          {"left_gripper", a.left_gripper},      {"right_xyz", to_json(a.right_xyz)},
          {"right_rot", to_json(a.right_rot)},   {"right_gripper", a.right_gripper}};
}

GroundTruthRecord ground_truth_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::validation, "a ground-truth record must be a JSON object");
  GroundTruthRecord g;
  g.id = need(j, "id").get<std::string>();
  g.mode = mode_from_name(need(j, "mode").get<std::string>());
  if (const json* v = find(j, "instruction")) g.instruction = v->get<std::string>();
  if (const json* v = find(j, "image")) g.image = v->get<std::string>();
  g.reasoning = optional_string(j, "reasoning");
  if (const json* v = find(j, "bbox")) g.bbox = bbox_from_json(*v);
  if (const json* v = find(j, "region")) g.region = bbox_from_json(*v);
  if (const json* v = find(j, "waypoints")) {
    g.waypoints = arms_from_json(*v);
    for (const auto& arm : g.waypoints) require(!arm.empty(), "ground-truth waypoints must be non-empty");
  }
  if (g.mode == ReasoningMode::full) {
    require(!g.waypoints.empty(), "full-mode ground truth '" + g.id + "' needs waypoints");
    require(g.bbox || g.region, "full-mode ground truth '" + g.id + "' needs a bbox or a region");
  }
  g.action = action_from_json(need(j, "action"));
  return g;
}

PredictionRecord prediction_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::validation, "a prediction record must be a JSON object");
  PredictionRecord p;
  p.id = need(j, "id").get<std::string>();
  p.gt = need(j, "gt").get<std::string>();
  p.group = optional_string(j, "group");
  if (const json* v = find(j, "text")) p.text = v->get<std::string>();
  p.reasoning = optional_string(j, "reasoning");
  if (const json* v = find(j, "bbox")) p.bbox = bbox_from_json(*v);
  if (const json* v = find(j, "keypoints")) p.keypoints = points_from_json(*v);
  if (const json* v = find(j, "waypoints")) p.waypoints = arms_from_json(*v);
  if (const json* v = find(j, "action")) p.action = action_from_json(*v);
  return p;
}

json to_json(const RewardReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"id", r.id},
          {"gt", r.gt},
          {"mode", mode_name(r.mode)},
          {"group", r.group ? json(*r.group) : json(nullptr)},
          {"rewards",
           {{"bbox", opt(r.rewards.bbox)},
            {"keypoint", opt(r.rewards.keypoint)},
            {"waypoint", opt(r.rewards.waypoint)},
            {"action", opt(r.rewards.action)},
            {"consistency", opt(r.rewards.consistency)},
            {"format", opt(r.rewards.format)}}},
          {"total", r.total},
          {"advantage", opt(r.advantage)}};
}

std::vector<GroundTruthRecord> read_ground_truth(const std::string& path) {
  return read_jsonl<GroundTruthRecord>(path, ground_truth_from_json);
}

std::vector<PredictionRecord> read_predictions(const std::string& path) {
  return read_jsonl<PredictionRecord>(path, prediction_from_json);
}

std::vector<RewardReport> score_batch(const std::vector<PredictionRecord>& preds,
                                      const std::vector<GroundTruthRecord>& gts, const ScoreOptions& opt) {
  opt.weights.validate();
  std::map<std::string, const GroundTruthRecord*> by_id;
  for (const auto& g : gts) {
    if (!by_id.emplace(g.id, &g).second) fail(ErrorKind::validation, "duplicate ground-truth id '" + g.id + "'");
  }
  for (const auto& p : preds) {
    if (!by_id.count(p.gt)) fail(ErrorKind::validation, "prediction '" + p.id + "' refers to unknown ground truth '" + p.gt + "'");
  }

  std::mutex judge_mu;
  std::vector<RewardReport> out(preds.size());
  parallel_for(preds.size(), opt.threads, [&](std::size_t i) {
    const PredictionRecord& p = preds[i];
    const GroundTruthRecord& g = *by_id.at(p.gt);
    const RewardWeights& w = opt.weights;
    RewardReport r;
    r.id = p.id;
    r.gt = p.gt;
    r.mode = g.mode;
    r.group = p.group;
    RewardComponents& c = r.rewards;
    if (g.mode == ReasoningMode::full) {
      if (g.bbox) c.bbox = p.bbox ? r_bbox(*p.bbox, *g.bbox) : 0.0;
      if (g.region) c.keypoint = p.keypoints.empty() ? 0.0 : r_keypoint(p.keypoints, *g.region);
      bool usable = p.waypoints.size() == g.waypoints.size();
      for (const auto& arm : p.waypoints) usable = usable && !arm.empty();
      c.waypoint = usable ? r_waypoint(p.waypoints, g.waypoints, w) : 0.0;
    }
    c.action = p.action ? r_action(*p.action, g.action, w) : 0.0;
    if (opt.judge && g.reasoning) {
      JudgeRequest req{g.image, g.instruction, *g.reasoning, p.reasoning.value_or("")};
      if (opt.judge->single_flight()) {
        std::lock_guard lock(judge_mu);
        c.consistency = r_consistency(*opt.judge, req, w);
      } else {
        c.consistency = r_consistency(*opt.judge, req, w);
      }
    }
    c.format = r_format(p.text, default_template(g.mode));
    r.total = total_reward(c, g.mode, w);
    out[i] = std::move(r);
  });

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].group) groups[*out[i].group].push_back(i);
  for (const auto& [name, members] : groups) {
    if (members.size() < 2) continue;
    std::vector<double> totals;
    for (auto i : members) totals.push_back(out[i].total);
    const auto adv = grpo_advantages(totals, opt.advantage_eps);
    for (std::size_t k = 0; k < members.size(); ++k) out[members[k]].advantage = adv[k];
  }
  return out;
}

std::string summary_csv(const std::vector<RewardReport>& reports, const std::vector<RewardReport>* baseline) {
  std::map<std::string, const RewardReport*> base_by_id;
  if (baseline)
    for (const auto& b : *baseline) base_by_id.emplace(b.id, &b);

  std::ostringstream os;
  os << "reward,full_mean,full_std,full_nsr,partial_mean,partial_std,partial_nsr\n";
  for (const auto& row : rows()) {
    os << row.name;
    for (ReasoningMode mode : {ReasoningMode::full, ReasoningMode::partial}) {
      std::vector<double> vals, ours, theirs;
      for (const auto& r : reports) {
        if (r.mode != mode) continue;
        const auto v = row.get(r);
        if (!v) continue;
        vals.push_back(*v);
        auto it = base_by_id.find(r.id);
        if (it == base_by_id.end() || it->second->mode != mode) continue;
        if (const auto b = row.get(*it->second)) {
          ours.push_back(*v);
          theirs.push_back(*b);
        }
      }
      if (vals.empty()) {
        os << ",-,-";
      } else {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        os << ',' << cell(mean) << ',' << cell(std::sqrt(ss / static_cast<double>(vals.size())));
      }
      os << ',' << (ours.empty() ? std::string("-") : cell(nsr(ours, theirs)));
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace actok

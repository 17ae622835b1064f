#include "actok/config.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>

#include "actok/error.hpp"
#include "actok/serialization.hpp"

namespace actok {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

void apply(const json& j, const std::string& section, const std::map<std::string, Setter>& setters) {
  if (!j.is_object()) fail(ErrorKind::validation, "config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorKind::validation, "unknown config key '" + section + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      fail(ErrorKind::validation, "config key '" + section + key + "': " + e.what());
    }
  }
}

double threshold(const json& j) {
  if (j.is_string() && j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

json threshold_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

std::array<double, 8> eight(const json& j) {
  if (!j.is_array() || j.size() != 8) fail(ErrorKind::validation, "expected an array of 8 numbers");
  std::array<double, 8> a{};
  for (std::size_t i = 0; i < 8; ++i) a[i] = j[i].get<double>();
  return a;
}

}  // namespace

void Config::validate() const {
  require(threads >= 1, "threads must be >= 1");
  thresholds.validate();
  require(k_trans >= 1 && k_rot >= 1, "k_trans and k_rot must be >= 1");
  require(kmeans_max_iterations >= 1, "kmeans max_iterations must be >= 1");
  require(kmeans_tolerance >= 0.0, "kmeans tolerance must be >= 0");
  require(horizon >= 1 && horizon <= kMaxHorizonFrames, "horizon must lie in [1, 40]");
  require(max_steps >= 1 && max_steps <= kMaxSteps, "max_steps must lie in [1, 5]");
  require(binning_bins >= 2, "binning bins must be >= 2");
  require(dedup_cell_size > 0.0 && std::isfinite(dedup_cell_size), "dedup cell_size must be > 0");
  require(!std::isnan(dedup_threshold), "dedup threshold must be a number");
  weights.validate();
  require(grpo.beta >= 0.0 && grpo.eps_low >= 0.0 && grpo.eps_high >= 0.0, "GRPO coefficients must be >= 0");
  require(judge == "mock" || judge == "none", "judge must be 'mock' or 'none'");
  require(advantage_eps >= 0.0, "advantage_eps must be >= 0");
  scaling.validate();
}

Config config_from_json(const json& j, Config c) {
  apply(j, "",
        {
            {"seed", [&](const json& v) { c.seed = v.get<std::uint64_t>(); }},
            {"threads", [&](const json& v) { c.threads = v.get<unsigned>(); }},
            {"waypoints",
             [&](const json& v) {
               apply(v, "waypoints.",
                     {{"pos_eps", [&](const json& x) { c.thresholds.pos_eps = threshold(x); }},
                      {"rot_eps", [&](const json& x) { c.thresholds.rot_eps = threshold(x); }},
                      {"gripper_eps", [&](const json& x) { c.thresholds.gripper_eps = threshold(x); }}});
             }},
            {"tokenizer",
             [&](const json& v) {
               apply(v, "tokenizer.",
                     {{"k_trans", [&](const json& x) { c.k_trans = x.get<std::size_t>(); }},
                      {"k_rot", [&](const json& x) { c.k_rot = x.get<std::size_t>(); }},
                      {"max_iterations", [&](const json& x) { c.kmeans_max_iterations = x.get<int>(); }},
                      {"tolerance", [&](const json& x) { c.kmeans_tolerance = x.get<double>(); }},
                      {"mode",
                       [&](const json& x) {
                         const auto m = x.get<std::string>();
                         if (m == "greedy") {
                           c.encode_mode = EncodeMode::greedy;
                         } else if (m == "top3") {
                           c.encode_mode = EncodeMode::top3;
                         } else {
                           fail(ErrorKind::validation, "tokenizer.mode must be 'greedy' or 'top3'");
                         }
                       }},
                      {"horizon", [&](const json& x) { c.horizon = x.get<std::size_t>(); }},
                      {"max_steps", [&](const json& x) { c.max_steps = x.get<std::size_t>(); }},
                      {"state_update", [&](const json& x) { c.state_update = x.get<bool>(); }},
                      {"binning_bins", [&](const json& x) { c.binning_bins = x.get<std::uint32_t>(); }}});
             }},
            {"dedup",
             [&](const json& v) {
               apply(v, "dedup.",
                     {{"cell_size", [&](const json& x) { c.dedup_cell_size = x.get<double>(); }},
                      {"threshold", [&](const json& x) { c.dedup_threshold = x.get<double>(); }}});
             }},
            {"mirror",
             [&](const json& v) {
               apply(v, "mirror.",
                     {{"torso", [&](const json& x) { c.mirror_frames.torso = pose_from_json(x); }},
                      {"left", [&](const json& x) { c.mirror_frames.left = pose_from_json(x); }},
                      {"right", [&](const json& x) { c.mirror_frames.right = pose_from_json(x); }},
                      {"lexicon", [&](const json& x) {
                         c.lexicon.clear();
                         for (const auto& pair : x) {
                           if (!pair.is_array() || pair.size() != 2)
                             fail(ErrorKind::validation, "mirror.lexicon entries must be [word, word] pairs");
                           c.lexicon.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
                         }
                       }}});
             }},
            {"rewards",
             [&](const json& v) {
               apply(v, "rewards.",
                     {{"goal", [&](const json& x) { c.weights.goal = x.get<double>(); }},
                      {"traj", [&](const json& x) { c.weights.traj = x.get<double>(); }},
                      {"text", [&](const json& x) { c.weights.text = x.get<double>(); }},
                      {"text_spatial", [&](const json& x) { c.weights.text_spatial = x.get<double>(); }},
                      {"action_w", [&](const json& x) { c.weights.action_w = eight(x); }},
                      {"action_k", [&](const json& x) { c.weights.action_k = eight(x); }},
                      {"format", [&](const json& x) { c.weights.format = x.get<double>(); }},
                      {"dtw_normalize", [&](const json& x) { c.weights.dtw_normalize = x.get<bool>(); }},
                      {"judge", [&](const json& x) { c.judge = x.get<std::string>(); }},
                      {"advantage_eps", [&](const json& x) { c.advantage_eps = x.get<double>(); }},
                      {"kl_beta", [&](const json& x) { c.grpo.beta = x.get<double>(); }},
                      {"eps_low", [&](const json& x) { c.grpo.eps_low = x.get<double>(); }},
                      {"eps_high", [&](const json& x) { c.grpo.eps_high = x.get<double>(); }}});
             }},
            {"scaling",
             [&](const json& v) {
               apply(v, "scaling.",
                     {{"grid_beta", [&](const json& x) { c.scaling.grid_beta = x.get<std::size_t>(); }},
                      {"grid_rstar", [&](const json& x) { c.scaling.grid_rstar = x.get<std::size_t>(); }},
                      {"beta_min", [&](const json& x) { c.scaling.beta_min = x.get<double>(); }},
                      {"beta_max", [&](const json& x) { c.scaling.beta_max = x.get<double>(); }},
                      {"rstar_min", [&](const json& x) { c.scaling.rstar_min = x.get<double>(); }},
                      {"rstar_max", [&](const json& x) { c.scaling.rstar_max = x.get<double>(); }},
                      {"max_iterations", [&](const json& x) { c.scaling.max_iterations = x.get<std::size_t>(); }}});
             }},
        });
  return c;
}

json to_json(const Config& c) {
  json lex = json::array();
  for (const auto& [a, b] : c.lexicon) lex.push_back({a, b});
  return {
      {"seed", c.seed},
      {"threads", c.threads},
      {"waypoints",
       {{"pos_eps", threshold_json(c.thresholds.pos_eps)},
        {"rot_eps", threshold_json(c.thresholds.rot_eps)},
        {"gripper_eps", threshold_json(c.thresholds.gripper_eps)}}},
      {"tokenizer",
       {{"k_trans", c.k_trans},
        {"k_rot", c.k_rot},
        {"max_iterations", c.kmeans_max_iterations},
        {"tolerance", c.kmeans_tolerance},
        {"mode", c.encode_mode == EncodeMode::greedy ? "greedy" : "top3"},
        {"horizon", c.horizon},
        {"max_steps", c.max_steps},
        {"state_update", c.state_update},
        {"binning_bins", c.binning_bins}}},
      {"dedup", {{"cell_size", c.dedup_cell_size}, {"threshold", c.dedup_threshold}}},
      {"mirror",
       {{"torso", to_json(c.mirror_frames.torso)},
        {"left", to_json(c.mirror_frames.left)},
        {"right", to_json(c.mirror_frames.right)},
        {"lexicon", std::move(lex)}}},
      {"rewards",
       {{"goal", c.weights.goal},
        {"traj", c.weights.traj},
        {"text", c.weights.text},
        {"text_spatial", c.weights.text_spatial},
        {"action_w", c.weights.action_w},
        {"action_k", c.weights.action_k},
        {"format", c.weights.format},
        {"dtw_normalize", c.weights.dtw_normalize},
        {"judge", c.judge},
        {"advantage_eps", c.advantage_eps},
        {"kl_beta", c.grpo.beta},
        {"eps_low", c.grpo.eps_low},
        {"eps_high", c.grpo.eps_high}}},
      {"scaling",
       {{"grid_beta", c.scaling.grid_beta},
        {"grid_rstar", c.scaling.grid_rstar},
        {"beta_min", c.scaling.beta_min},
        {"beta_max", c.scaling.beta_max},
        {"rstar_min", c.scaling.rstar_min},
        {"rstar_max", c.scaling.rstar_max},
        {"max_iterations", c.scaling.max_iterations}}},
  };
}

Config load_config(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, "config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const Config& c) { return fnv1a_hex(to_json(c).dump()); }

}  // namespace actok

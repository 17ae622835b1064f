#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "actok/dedup.hpp"
#include "actok/mirror.hpp"
#include "actok/rewards.hpp"
#include "actok/scaling.hpp"
#include "actok/tokenizer.hpp"

namespace actok {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr const char* kConfigEnvVar = "ACTOK_CONFIG";

/// Every tunable of the toolkit. Built-in defaults are overridden by a JSON
/// config file, which command-line flags override in turn. Unknown keys are
/// rejected so that typos fail loudly.
struct Config {
  std::uint64_t seed = 0;
  unsigned threads = 1;

  WaypointThresholds thresholds;
  std::size_t k_trans = 150;
  std::size_t k_rot = 150;
  int kmeans_max_iterations = 100;
  double kmeans_tolerance = 1e-8;

  EncodeMode encode_mode = EncodeMode::greedy;
  std::size_t horizon = kMaxHorizonFrames;
  std::size_t max_steps = kMaxSteps;
  bool state_update = true;

  std::uint32_t binning_bins = 256;

  double dedup_cell_size = 0.05;
  double dedup_threshold = 0.15;

  MirrorFrames mirror_frames;
  Lexicon lexicon = default_lexicon();

  RewardWeights weights;
  GrpoConfig grpo;
  std::string judge = "mock";  // "mock" or "none"
  double advantage_eps = 1e-8;

  ScalingFitOptions scaling;

  void validate() const;
};

/// Applies the keys present in `j` on top of `base`.
Config config_from_json(const nlohmann::json& j, Config base = {});
nlohmann::json to_json(const Config& c);

/// Reads a config file over the defaults.
Config load_config(const std::string& path);

/// FNV-1a 64-bit, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Hash of the canonical JSON form of the config.
std::string config_hash(const Config& c);

}  // namespace actok

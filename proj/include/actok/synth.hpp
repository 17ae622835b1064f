#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "actok/episode.hpp"
#include "actok/scaling.hpp"

namespace actok {

// Synthetic data for tests, benchmarks and the bundled samples.

struct SynthOptions {
  std::size_t frames = 120;
  double frame_period = 1.0 / 30.0;
  double amplitude = 0.12;     // meters, per sinusoid component
  double rot_amplitude = 0.4;  // radians
  double max_frequency = 0.6;  // Hz
  std::size_t gripper_switches = 2;
};

/// Smooth bimanual episode: every end-effector follows a sum of slow
/// sinusoids around a random rest pose; grippers switch between open and
/// closed with short linear ramps.
Episode synth_episode(std::mt19937_64& rng, const std::string& id, const SynthOptions& opt = {});

/// `n` episodes spread over `groups` (instruction, subtask) pairs.
std::vector<Episode> synth_corpus(std::size_t n, std::uint64_t seed, const SynthOptions& opt = {},
                                  std::size_t groups = 4);

/// Observations B / D'^beta + E on the U x R grid, each multiplied by
/// (1 + noise * N(0, 1)).
std::vector<ScalingObservation> synth_scaling(const ScalingParams& p, std::span<const double> U,
                                              std::span<const double> R, double noise, std::uint64_t seed);

struct ScalingDesign {
  std::vector<double> U;
  std::vector<double> R;
};

/// U_D from 1e2 to 1e8 in half decades, R_D from 0 to 40 (denser near 0).
/// Dense enough that 1% loss noise still pins R* down to a few percent.
ScalingDesign default_scaling_design();

}  // namespace actok

#include "actok/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "actok/kmeans.hpp"

namespace actok {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng()); }

double gaussian(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_uniform(rng());  // (0, 1]
  const double u2 = unit_uniform(rng());
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

struct Wave {
  Vec3 amp;
  Vec3 freq;
  Vec3 phase;

  Vec3 at(double t) const {
    const double w = 2.0 * std::numbers::pi;
    return {amp.x * std::sin(w * freq.x * t + phase.x), amp.y * std::sin(w * freq.y * t + phase.y),
            amp.z * std::sin(w * freq.z * t + phase.z)};
  }
};

Wave random_wave(std::mt19937_64& rng, double amplitude, double max_freq) {
  Wave w;
  w.amp = {uniform(rng, -amplitude, amplitude), uniform(rng, -amplitude, amplitude), uniform(rng, -amplitude, amplitude)};
  w.freq = {uniform(rng, 0.05, max_freq), uniform(rng, 0.05, max_freq), uniform(rng, 0.05, max_freq)};
  w.phase = {uniform(rng, 0.0, 6.28), uniform(rng, 0.0, 6.28), uniform(rng, 0.0, 6.28)};
  return w;
}

struct EffectorMotion {
  Pose rest;
  std::array<Wave, 2> pos;
  Wave rot;

  Pose at(double t) const {
    return {rest.position + pos[0].at(t) + pos[1].at(t),
            Rotation::from_rotation_vector(rot.at(t)) * rest.orientation};
  }
};

EffectorMotion random_motion(std::mt19937_64& rng, const Vec3& centre, const SynthOptions& opt, double scale) {
  EffectorMotion m;
  const Vec3 axis{gaussian(rng), gaussian(rng), gaussian(rng)};
  m.rest = {centre + Vec3{uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05)},
            Rotation::from_axis_angle(axis.norm() > 0.0 ? axis : Vec3{0, 0, 1}, uniform(rng, 0.0, 3.0))};
  m.pos[0] = random_wave(rng, opt.amplitude * scale, opt.max_frequency);
  m.pos[1] = random_wave(rng, 0.3 * opt.amplitude * scale, opt.max_frequency);
  m.rot = random_wave(rng, opt.rot_amplitude * scale, opt.max_frequency);
  return m;
}

// Open/closed plateaus joined by ramps of a few frames.
std::vector<double> gripper_track(std::mt19937_64& rng, std::size_t frames, std::size_t switches) {
  std::vector<double> g(frames, 0.0);
  double level = (rng() & 1u) ? 1.0 : 0.0;
  std::vector<std::size_t> at;
  for (std::size_t s = 0; s < switches && frames > 8; ++s) at.push_back(4 + rng() % (frames - 8));
  std::sort(at.begin(), at.end());
  std::size_t next = 0;
  double from = level;
  std::size_t ramp_start = frames;
  const std::size_t ramp = 6;
  for (std::size_t k = 0; k < frames; ++k) {
    if (next < at.size() && k == at[next]) {
      from = level;
      level = 1.0 - level;
      ramp_start = k;
      while (next < at.size() && at[next] <= k) ++next;
    }
    if (ramp_start <= k && k < ramp_start + ramp) {
      const double a = static_cast<double>(k - ramp_start + 1) / static_cast<double>(ramp);
      g[k] = from + (level - from) * a;
    } else {
      g[k] = level;
    }
  }
  return g;
}

}  // namespace

Episode synth_episode(std::mt19937_64& rng, const std::string& id, const SynthOptions& opt) {
  Episode ep;
  ep.id = id;
  ep.instruction = "pick up the cup with the left hand";
  ep.subtask = "grasp";
  const EffectorMotion torso = random_motion(rng, {0.0, 0.0, 0.9}, opt, 0.25);
  const EffectorMotion left = random_motion(rng, {0.45, 0.25, 0.95}, opt, 1.0);
  const EffectorMotion right = random_motion(rng, {0.45, -0.25, 0.95}, opt, 1.0);
  const auto lg = gripper_track(rng, opt.frames, opt.gripper_switches);
  const auto rg = gripper_track(rng, opt.frames, opt.gripper_switches);
  ep.frames.resize(opt.frames);
  for (std::size_t k = 0; k < opt.frames; ++k) {
    const double t = static_cast<double>(k) * opt.frame_period;
    RobotState& s = ep.frames[k];
    s.timestamp = t;
    s.torso = torso.at(t);
    s.left = left.at(t);
    s.right = right.at(t);
    s.left_gripper = lg[k];
    s.right_gripper = rg[k];
  }
  return ep;
}

std::vector<Episode> synth_corpus(std::size_t n, std::uint64_t seed, const SynthOptions& opt, std::size_t groups) {
  static const std::array<const char*, 4> instructions = {
      "pick up the cup with the left hand", "put the apple in the bowl on the right", "open the left drawer",
      "hand the bottle from the right arm to the left arm"};
  static const std::array<const char*, 3> subtasks = {"reach", "grasp", "place"};
  std::mt19937_64 rng(seed);
  std::vector<Episode> out;
  out.reserve(n);
  groups = std::max<std::size_t>(groups, 1);
  for (std::size_t i = 0; i < n; ++i) {
    Episode ep = synth_episode(rng, "ep" + std::to_string(i), opt);
    const std::size_t g = i % groups;
    ep.instruction = instructions[g % instructions.size()];
    ep.subtask = subtasks[(g / instructions.size()) % subtasks.size()];
    out.push_back(std::move(ep));
  }
  return out;
}

std::vector<ScalingObservation> synth_scaling(const ScalingParams& p, std::span<const double> U,
                                              std::span<const double> R, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ScalingObservation> out;
  for (double u : U) {
    for (double r : R) {
      const double clean = predict_loss(p, u, r);
      const double loss = noise > 0.0 ? clean * (1.0 + noise * gaussian(rng)) : clean;
      out.push_back({u, r, loss});
    }
  }
  return out;
}

ScalingDesign default_scaling_design() {
  ScalingDesign d;
  for (int i = 0; i <= 12; ++i) d.U.push_back(std::pow(10.0, 2.0 + 0.5 * i));
  d.R = {0, 0.5, 1, 1.5, 2, 3, 4, 5, 6, 8, 10, 12, 16, 20, 30, 40};
  return d;
}

}  // namespace actok

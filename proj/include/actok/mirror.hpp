#pragma once

#include <string>
#include <utility>
#include <vector>

#include "actok/episode.hpp"

namespace actok {

/// World-from-base transforms of the torso and the two arm bases. Poses in an
/// episode are expressed in these frames.
struct MirrorFrames {
  Pose torso;
  Pose left;
  Pose right;
};

using Lexicon = std::vector<std::pair<std::string, std::string>>;

/// Lowercase word pairs swapped by mirror_text, in both directions.
const Lexicon& default_lexicon();

/// Whole-word swap of lexicon entries. Lower, Capitalized and UPPER spellings
/// are swapped keeping their case; other spellings are left alone.
std::string mirror_text(const std::string& text, const Lexicon& lexicon = default_lexicon());

inline constexpr const char* kMirrorSuffix = "~mirror";

/// Left-right mirror of an episode. The right arm's motion becomes the left
/// arm's and vice versa, grippers swap, mirror_flag flips, the id gains or
/// loses kMirrorSuffix and instruction/subtask words are swapped. Applying it
/// twice returns the original episode up to rounding.
Episode mirror_episode(const Episode& ep, const MirrorFrames& frames = {}, const Lexicon& lexicon = default_lexicon());

}  // namespace actok

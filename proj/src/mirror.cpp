#include "actok/mirror.hpp"

#include <algorithm>
#include <cctype>

namespace actok {

namespace {

enum class Case { lower, capitalized, upper, other };

Case case_of(const std::string& w) {
  const bool all_lower = std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::islower(c); });
  if (all_lower) return Case::lower;
  const bool all_upper = std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isupper(c); });
  if (all_upper) return Case::upper;
  const bool rest_lower = std::all_of(w.begin() + 1, w.end(), [](unsigned char c) { return std::islower(c); });
  if (std::isupper(static_cast<unsigned char>(w[0])) && rest_lower) return Case::capitalized;
  return Case::other;
}

std::string apply_case(std::string w, Case c) {
  if (c == Case::upper) {
    for (auto& ch : w) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  } else if (c == Case::capitalized) {
    w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  }
  return w;
}

const std::string* partner(const std::string& lower, const Lexicon& lexicon) {
  for (const auto& [a, b] : lexicon) {
    if (lower == a) return &b;
    if (lower == b) return &a;
  }
  return nullptr;
}

RobotState mirror_state(const RobotState& s, const MirrorFrames& f) {
  RobotState m;
  m.timestamp = s.timestamp;
  m.torso = mirror_pose(s.torso, f.torso, f.torso);
  m.left = mirror_pose(s.right, f.right, f.left);
  m.right = mirror_pose(s.left, f.left, f.right);
  m.left_gripper = s.right_gripper;
  m.right_gripper = s.left_gripper;
  return m;
}

}  // namespace

const Lexicon& default_lexicon() {
  static const Lexicon lex = {{"left", "right"},         {"leftmost", "rightmost"},
                              {"leftward", "rightward"}, {"leftwards", "rightwards"},
                              {"lefthand", "righthand"}};
  return lex;
}

std::string mirror_text(const std::string& text, const Lexicon& lexicon) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isalpha(static_cast<unsigned char>(text[i]))) {
      out += text[i++];
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
    const std::string word = text.substr(i, j - i);
    const Case c = case_of(word);
    std::string lower = word;
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    const std::string* p = c == Case::other ? nullptr : partner(lower, lexicon);
    out += p ? apply_case(*p, c) : word;
    i = j;
  }
  return out;
}

Episode mirror_episode(const Episode& ep, const MirrorFrames& frames, const Lexicon& lexicon) {
  Episode m;
  const std::string suffix = kMirrorSuffix;
  if (ep.id.size() >= suffix.size() && ep.id.compare(ep.id.size() - suffix.size(), suffix.size(), suffix) == 0) {
    m.id = ep.id.substr(0, ep.id.size() - suffix.size());
  } else {
    m.id = ep.id + suffix;
  }
  m.instruction = mirror_text(ep.instruction, lexicon);
  m.subtask = mirror_text(ep.subtask, lexicon);
  m.mirror_flag = !ep.mirror_flag;
  m.frames.reserve(ep.frames.size());
  for (const auto& s : ep.frames) m.frames.push_back(mirror_state(s, frames));
  return m;
}

}  // namespace actok

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "actok/geometry.hpp"

namespace actok {

inline constexpr int kEpisodeFormatVersion = 1;

struct Episode {
  std::string id;
  std::string instruction;
  std::string subtask;
  std::vector<RobotState> frames;
  // Set when the camera streams of this episode must be flipped horizontally
  // downstream (the episode is a mirrored copy).
  bool mirror_flag = false;

  /// Non-empty, strictly increasing timestamps, finite poses, grippers in [0, 1].
  void validate() const;
  bool operator==(const Episode&) const = default;
};

/// JSONL, one episode per line. Blank lines are skipped. Any malformed line
/// aborts the whole read with an error naming the line number.
std::vector<Episode> read_episodes(std::istream& in);
std::vector<Episode> read_episodes(const std::string& path);

void write_episodes(std::ostream& out, const std::vector<Episode>& eps);
void write_episodes(const std::string& path, const std::vector<Episode>& eps);

}  // namespace actok

#include "actok/episode.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "actok/error.hpp"
#include "actok/serialization.hpp"

namespace actok {

void Episode::validate() const {
  require(!frames.empty(), "episode '" + id + "' has no frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    require(std::isfinite(f.timestamp), "episode '" + id + "' has a non-finite timestamp");
    if (i > 0) require(f.timestamp > frames[i - 1].timestamp, "episode '" + id + "' timestamps are not increasing");
    for (EndEffector e : kEndEffectors) require(f.pose(e).position.finite(), "episode '" + id + "' has a non-finite pose");
    require(f.left_gripper >= 0.0 && f.left_gripper <= 1.0 && f.right_gripper >= 0.0 && f.right_gripper <= 1.0,
            "episode '" + id + "' has a gripper value outside [0, 1]");
  }
}

std::vector<Episode> read_episodes(std::istream& in) {
  std::vector<Episode> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(episode_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::validation, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.kind(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Episode> read_episodes(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "' for reading");
  return read_episodes(in);
}

void write_episodes(std::ostream& out, const std::vector<Episode>& eps) {
  for (const auto& e : eps) out << to_json(e).dump() << '\n';
}

void write_episodes(const std::string& path, const std::vector<Episode>& eps) {
  std::ostringstream ss;
  write_episodes(ss, eps);
  write_file_atomic(path, ss.str());
}

}  // namespace actok

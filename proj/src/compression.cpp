#include "actok/compression.hpp"

#include <algorithm>
#include <sstream>

namespace actok {

std::vector<CompressionRow> compression_report(const std::string& episode, std::span<const RobotState> traj,
                                               const MotionTokenLibrary& lib, const EncodeOptions& opt) {
  std::vector<CompressionRow> rows;
  if (traj.size() < 2) return rows;
  for (std::size_t s = 0; s + 1 < traj.size(); s += opt.horizon) {
    const std::size_t end = std::min(traj.size() - 1, s + opt.horizon);
    const auto chunk = traj.subspan(s, end - s + 1);
    CompressionRow r;
    r.episode = episode;
    r.chunk_start = s;
    r.frames = end - s;
    r.binning_tokens = kBinningDims * r.frames;
    const auto seq = encode(chunk, lib, opt);
    r.spatial_tokens = seq.token_count();
    r.spatial_frames = seq.horizon_frames;
    for (const auto& w : encode_trajectory(chunk, lib, opt).windows) r.cover_tokens += w.token_count();
    rows.push_back(r);
  }
  return rows;
}

namespace {

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string compression_csv(std::span<const CompressionRow> rows) {
  std::ostringstream os;
  os << "episode,chunk_start,frames,binning_tokens,spatial_tokens,spatial_frames,cover_tokens\n";
  for (const auto& r : rows) {
    os << quoted(r.episode) << ',' << r.chunk_start << ',' << r.frames << ',' << r.binning_tokens << ',' << r.spatial_tokens
       << ',' << r.spatial_frames << ',' << r.cover_tokens << '\n';
  }
  return os.str();
}

}  // namespace actok

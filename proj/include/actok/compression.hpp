#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "actok/tokenizer.hpp"

namespace actok {

/// Token cost of one fixed-length chunk under both tokenizers. A chunk of
/// `frames` frames spans frames + 1 states.
struct CompressionRow {
  std::string episode;
  std::size_t chunk_start = 0;
  std::size_t frames = 0;
  std::size_t binning_tokens = 0;  // one token per dimension per frame
  std::size_t spatial_tokens = 0;  // a single encoded window
  std::size_t spatial_frames = 0;  // frames that window covers
  std::size_t cover_tokens = 0;    // chained windows covering every frame
};

inline constexpr std::size_t kBinningDims = kSlotsPerStep;

std::vector<CompressionRow> compression_report(const std::string& episode, std::span<const RobotState> traj,
                                               const MotionTokenLibrary& lib, const EncodeOptions& opt);

std::string compression_csv(std::span<const CompressionRow> rows);

}  // namespace actok

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace actok {

/// Per-dimension uniform quantization, the baseline action tokenizer.
struct BinningSpec {
  std::size_t bins = 256;
  std::vector<double> mins;
  std::vector<double> maxs;

  std::size_t dims() const { return mins.size(); }
  double bin_width(std::size_t d) const { return (maxs[d] - mins[d]) / static_cast<double>(bins); }
  void validate() const;
};

/// Ranges from the data's per-dimension min/max, widened by `margin` of the
/// span on each side. `values` is a flattened chunk, dimension = index % dims.
BinningSpec fit_binning_spec(std::span<const double> values, std::size_t dims, std::size_t bins = 256,
                             double margin = 0.01);

/// One token per value (D x H tokens for a D-dimensional, H-step chunk).
/// Out-of-range values clamp to the edge bins.
std::vector<std::uint32_t> binning_encode(std::span<const double> values, const BinningSpec& spec);

/// Bin centers.
std::vector<double> binning_decode(std::span<const std::uint32_t> tokens, const BinningSpec& spec);

}  // namespace actok

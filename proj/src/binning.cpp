#include "actok/binning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "actok/error.hpp"

namespace actok {

void BinningSpec::validate() const {
  require(bins >= 2, "binning needs at least 2 bins");
  require(!mins.empty() && mins.size() == maxs.size(), "binning ranges must be non-empty and paired");
  for (std::size_t d = 0; d < mins.size(); ++d)
    require(std::isfinite(mins[d]) && std::isfinite(maxs[d]) && mins[d] < maxs[d], "binning range needs min < max");
}

BinningSpec fit_binning_spec(std::span<const double> values, std::size_t dims, std::size_t bins, double margin) {
  require(dims >= 1 && !values.empty() && values.size() % dims == 0, "values must be a whole number of D-vectors");
  BinningSpec spec;
  spec.bins = bins;
  spec.mins.assign(dims, std::numeric_limits<double>::infinity());
  spec.maxs.assign(dims, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t d = i % dims;
    spec.mins[d] = std::min(spec.mins[d], values[i]);
    spec.maxs[d] = std::max(spec.maxs[d], values[i]);
  }
  for (std::size_t d = 0; d < dims; ++d) {
    double pad = (spec.maxs[d] - spec.mins[d]) * margin;
    if (pad == 0.0) pad = std::max(std::abs(spec.mins[d]) * margin, 1e-6);  // constant dimension
    spec.mins[d] -= pad;
    spec.maxs[d] += pad;
  }
  spec.validate();
  return spec;
}

std::vector<std::uint32_t> binning_encode(std::span<const double> values, const BinningSpec& spec) {
  spec.validate();
  require(values.size() % spec.dims() == 0, "value count is not a multiple of the dimension count");
  std::vector<std::uint32_t> out(values.size());
  const double top = static_cast<double>(spec.bins - 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t d = i % spec.dims();
    const double u = (values[i] - spec.mins[d]) / (spec.maxs[d] - spec.mins[d]);
    out[i] = static_cast<std::uint32_t>(std::clamp(std::floor(u * static_cast<double>(spec.bins)), 0.0, top));
  }
  return out;
}

std::vector<double> binning_decode(std::span<const std::uint32_t> tokens, const BinningSpec& spec) {
  spec.validate();
  require(tokens.size() % spec.dims() == 0, "token count is not a multiple of the dimension count");
  std::vector<double> out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::size_t d = i % spec.dims();
    require(tokens[i] < spec.bins, "binning token out of range");
    out[i] = spec.mins[d] + (static_cast<double>(tokens[i]) + 0.5) * spec.bin_width(d);
  }
  return out;
}

}  // namespace actok

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "actok/geometry.hpp"

namespace actok {

struct KMeansOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  int max_iterations = 100;
  double tolerance = 1e-8;  // stop once no centroid moves further than this
};

template <typename Centroid>
struct KMeansResult {
  std::vector<Centroid> centroids;
  std::vector<std::size_t> assignment;  // nearest centroid per input point
  int iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm in R^3 with k-means++ seeding.
KMeansResult<Vec3> kmeans_translation(std::span<const Vec3> points, const KMeansOptions& opt);

/// Lloyd's algorithm on unit quaternions under the sign-invariant chordal
/// distance min(|q - c|, |q + c|). Means are taken after aligning each member
/// to its centroid's hemisphere and projected back onto the unit sphere.
KMeansResult<Rotation> kmeans_rotation(std::span<const Rotation> points, const KMeansOptions& opt);

/// Portable uniform double in [0, 1) from a 64-bit generator output.
inline double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace actok

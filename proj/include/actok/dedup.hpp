#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "actok/episode.hpp"

namespace actok {

enum class Plane { xy, xz, yz };
inline constexpr std::array<Plane, 3> kPlanes = {Plane::xy, Plane::xz, Plane::yz};
std::string_view plane_name(Plane p);

/// Placement of a 2-D grid on a projection plane. Origins sit on multiples of
/// cell_size so grids built for the same group line up cell for cell.
struct GridFrame {
  Plane plane = Plane::xy;
  double cell_size = 0.05;
  double origin_u = 0.0;
  double origin_v = 0.0;
  std::size_t nu = 0;
  std::size_t nv = 0;
  bool operator==(const GridFrame&) const = default;
};

/// Smallest snapped frame covering both arms of every episode given.
GridFrame union_frame(std::span<const Episode> eps, Plane plane, double cell_size);

struct OccupancyGrid {
  GridFrame frame;
  std::vector<std::uint8_t> occupied;  // row-major, nv rows of nu cells
  std::size_t n_occupied = 0;

  bool at(std::size_t iu, std::size_t iv) const { return occupied[iv * frame.nu + iu] != 0; }
  Vec3 origin() const;
};

/// Occupancy of one arm's end-effector path projected onto `frame.plane`.
/// Every frame's cell is occupied, and so is every cell the straight segment
/// between consecutive frames passes through.
OccupancyGrid rasterize(const Episode& ep, EndEffector arm, const GridFrame& frame);

/// Same, on a frame fitted to this episode alone.
OccupancyGrid rasterize(const Episode& ep, EndEffector arm, Plane plane, double cell_size);

/// sum(A xor B) / max(n_A, n_B); 0 when both grids are empty. The grids must
/// share the same frame.
double grid_distance(const OccupancyGrid& a, const OccupancyGrid& b);

/// Left and right arm on xy, xz, yz, in that order.
using EpisodeGrids = std::array<OccupancyGrid, 6>;
EpisodeGrids episode_grids(const Episode& ep, const std::array<GridFrame, 3>& frames);

/// Mean of the six per-arm, per-plane grid distances.
double combined_distance(const EpisodeGrids& a, const EpisodeGrids& b);

struct DedupOptions {
  double cell_size = 0.05;
  double threshold = 0.15;
  unsigned threads = 1;
};

struct DedupRemoval {
  std::string id;
  std::string matched_id;  // nearest kept episode
  double distance = 0.0;
};

struct DedupReport {
  std::vector<std::string> kept;
  std::vector<DedupRemoval> removed;
  double threshold = 0.0;
  double cell_size = 0.0;
};

/// Within each (instruction, subtask) group, scans episodes in input order
/// and drops one when its combined distance to some already kept episode of
/// the group is below the threshold.
DedupReport dedup(std::span<const Episode> eps, const DedupOptions& opt);

}  // namespace actok

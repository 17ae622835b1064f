#include "actok/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "actok/error.hpp"
#include "actok/parallel.hpp"

namespace actok {

namespace {

std::pair<double, double> project(const Vec3& p, Plane plane) {
  switch (plane) {
    case Plane::xy:
      return {p.x, p.y};
    case Plane::xz:
      return {p.x, p.z};
    case Plane::yz:
      break;
  }
  return {p.y, p.z};
}

constexpr std::array<EndEffector, 2> kArms = {EndEffector::left, EndEffector::right};

GridFrame snapped_frame(Plane plane, double cell, double umin, double vmin, double umax, double vmax) {
  GridFrame f;
  f.plane = plane;
  f.cell_size = cell;
  f.origin_u = std::floor(umin / cell) * cell;
  f.origin_v = std::floor(vmin / cell) * cell;
  f.nu = static_cast<std::size_t>(std::floor((umax - f.origin_u) / cell)) + 1;
  f.nv = static_cast<std::size_t>(std::floor((vmax - f.origin_v) / cell)) + 1;
  return f;
}

class Raster {
 public:
  explicit Raster(const GridFrame& f) : f_(f), cells_(f.nu * f.nv, 0) {}

  // Continuous cell coordinates.
  std::pair<double, double> local(double u, double v) const {
    return {(u - f_.origin_u) / f_.cell_size, (v - f_.origin_v) / f_.cell_size};
  }

  void mark(long iu, long iv) {
    iu = std::clamp<long>(iu, 0, static_cast<long>(f_.nu) - 1);
    iv = std::clamp<long>(iv, 0, static_cast<long>(f_.nv) - 1);
    cells_[static_cast<std::size_t>(iv) * f_.nu + static_cast<std::size_t>(iu)] = 1;
  }

  // Grid traversal in the style of Amanatides & Woo: visit every cell the
  // segment passes through, stepping across the nearer boundary each time.
  void segment(double u0, double v0, double u1, double v1) {
    auto [a0, b0] = local(u0, v0);
    auto [a1, b1] = local(u1, v1);
    long cu = static_cast<long>(std::floor(a0)), cv = static_cast<long>(std::floor(b0));
    const long eu = static_cast<long>(std::floor(a1)), ev = static_cast<long>(std::floor(b1));
    mark(cu, cv);
    const double da = a1 - a0, db = b1 - b0;
    const long su = da > 0 ? 1 : -1, sv = db > 0 ? 1 : -1;
    const double inf = std::numeric_limits<double>::infinity();
    double tmu = da == 0 ? inf : (su > 0 ? (static_cast<double>(cu) + 1.0 - a0) : (a0 - static_cast<double>(cu))) / std::abs(da);
    double tmv = db == 0 ? inf : (sv > 0 ? (static_cast<double>(cv) + 1.0 - b0) : (b0 - static_cast<double>(cv))) / std::abs(db);
    const double tdu = da == 0 ? inf : 1.0 / std::abs(da);
    const double tdv = db == 0 ? inf : 1.0 / std::abs(db);
    long budget = std::abs(eu - cu) + std::abs(ev - cv);
    while ((cu != eu || cv != ev) && budget-- > 0) {
      if (tmu < tmv) {
        cu += su;
        tmu += tdu;
      } else if (tmv < tmu) {
        cv += sv;
        tmv += tdv;
      } else {
        // exact corner crossing: move diagonally
        cu += su;
        cv += sv;
        tmu += tdu;
        tmv += tdv;
        --budget;
      }
      mark(cu, cv);
    }
    mark(eu, ev);
  }

  void point(double u, double v) {
    auto [a, b] = local(u, v);
    mark(static_cast<long>(std::floor(a)), static_cast<long>(std::floor(b)));
  }

  OccupancyGrid finish() && {
    OccupancyGrid g;
    g.frame = f_;
    g.n_occupied = static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
    g.occupied = std::move(cells_);
    return g;
  }

 private:
  GridFrame f_;
  std::vector<std::uint8_t> cells_;
};

}  // namespace

std::string_view plane_name(Plane p) {
  switch (p) {
    case Plane::xy:
      return "xy";
    case Plane::xz:
      return "xz";
    case Plane::yz:
      break;
  }
  return "yz";
}

Vec3 OccupancyGrid::origin() const {
  switch (frame.plane) {
    case Plane::xy:
      return {frame.origin_u, frame.origin_v, 0.0};
    case Plane::xz:
      return {frame.origin_u, 0.0, frame.origin_v};
    case Plane::yz:
      break;
  }
  return {0.0, frame.origin_u, frame.origin_v};
}

GridFrame union_frame(std::span<const Episode> eps, Plane plane, double cell_size) {
  require(cell_size > 0.0 && std::isfinite(cell_size), "cell_size must be > 0");
  double umin = std::numeric_limits<double>::infinity(), vmin = umin;
  double umax = -umin, vmax = -umin;
  for (const auto& ep : eps)
    for (const auto& f : ep.frames)
      for (EndEffector arm : kArms) {
        auto [u, v] = project(f.pose(arm).position, plane);
        umin = std::min(umin, u);
        vmin = std::min(vmin, v);
        umax = std::max(umax, u);
        vmax = std::max(vmax, v);
      }
  if (umin > umax) return snapped_frame(plane, cell_size, 0.0, 0.0, 0.0, 0.0);
  return snapped_frame(plane, cell_size, umin, vmin, umax, vmax);
}

OccupancyGrid rasterize(const Episode& ep, EndEffector arm, const GridFrame& frame) {
  require(frame.cell_size > 0.0, "cell_size must be > 0");
  require(frame.nu > 0 && frame.nv > 0, "grid frame has no cells");
  Raster r(frame);
  for (std::size_t k = 0; k < ep.frames.size(); ++k) {
    auto [u, v] = project(ep.frames[k].pose(arm).position, frame.plane);
    if (k == 0) {
      r.point(u, v);
      continue;
    }
    auto [pu, pv] = project(ep.frames[k - 1].pose(arm).position, frame.plane);
    r.segment(pu, pv, u, v);
  }
  return std::move(r).finish();
}

OccupancyGrid rasterize(const Episode& ep, EndEffector arm, Plane plane, double cell_size) {
  return rasterize(ep, arm, union_frame(std::span<const Episode>(&ep, 1), plane, cell_size));
}

double grid_distance(const OccupancyGrid& a, const OccupancyGrid& b) {
  require(a.frame == b.frame, "grid_distance needs grids on the same frame");
  const std::size_t denom = std::max(a.n_occupied, b.n_occupied);
  if (denom == 0) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.occupied.size(); ++i) diff += (a.occupied[i] ^ b.occupied[i]) & 1u;
  return static_cast<double>(diff) / static_cast<double>(denom);
}

EpisodeGrids episode_grids(const Episode& ep, const std::array<GridFrame, 3>& frames) {
  EpisodeGrids g;
  std::size_t i = 0;
  for (EndEffector arm : kArms)
    for (const auto& f : frames) g[i++] = rasterize(ep, arm, f);
  return g;
}

double combined_distance(const EpisodeGrids& a, const EpisodeGrids& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += grid_distance(a[i], b[i]);
  return s / static_cast<double>(a.size());
}

DedupReport dedup(std::span<const Episode> eps, const DedupOptions& opt) {
  require(opt.cell_size > 0.0 && std::isfinite(opt.cell_size), "dedup cell_size must be > 0");
  require(!std::isnan(opt.threshold), "dedup threshold must be a number");
  DedupReport rep;
  rep.threshold = opt.threshold;
  rep.cell_size = opt.cell_size;

  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < eps.size(); ++i) groups[{eps[i].instruction, eps[i].subtask}].push_back(i);

  std::vector<bool> removed(eps.size(), false);
  std::vector<DedupRemoval> removals(eps.size());
  for (const auto& [key, members] : groups) {
    std::vector<Episode> group;
    group.reserve(members.size());
    for (auto i : members) group.push_back(eps[i]);
    std::array<GridFrame, 3> frames;
    for (std::size_t p = 0; p < 3; ++p) frames[p] = union_frame(group, kPlanes[p], opt.cell_size);

    std::vector<EpisodeGrids> grids(members.size());
    parallel_for(members.size(), opt.threads, [&](std::size_t m) { grids[m] = episode_grids(group[m], frames); });

    std::vector<std::size_t> kept;
    for (std::size_t m = 0; m < members.size(); ++m) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t match = 0;
      for (auto k : kept) {
        const double d = combined_distance(grids[m], grids[k]);
        if (d < best) {
          best = d;
          match = k;
        }
      }
      if (best < opt.threshold) {
        removed[members[m]] = true;
        removals[members[m]] = {group[m].id, group[match].id, best};
      } else {
        kept.push_back(m);
      }
    }
  }
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (removed[i]) {
      rep.removed.push_back(removals[i]);
    } else {
      rep.kept.push_back(eps[i].id);
    }
  }
  return rep;
}

}  // namespace actok

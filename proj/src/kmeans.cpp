#include "actok/kmeans.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "actok/error.hpp"

namespace actok {

namespace {

template <std::size_t D>
using Point = std::array<double, D>;

struct EuclideanSpace {
  static constexpr std::size_t dim = 3;
  static double dist2(const Point<3>& p, const Point<3>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) s += (p[i] - c[i]) * (p[i] - c[i]);
    return s;
  }
  static void accumulate(Point<3>& sum, const Point<3>& p, const Point<3>&) {
    for (std::size_t i = 0; i < 3; ++i) sum[i] += p[i];
  }
  static Point<3> finalize(const Point<3>& sum, std::size_t n, const Point<3>&) {
    Point<3> c{};
    for (std::size_t i = 0; i < 3; ++i) c[i] = sum[i] / static_cast<double>(n);
    return c;
  }
};

// Unit quaternions, q ~ -q.
struct QuaternionSpace {
  static constexpr std::size_t dim = 4;
  static double dot(const Point<4>& a, const Point<4>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
  }
  static double dist2(const Point<4>& p, const Point<4>& c) {
    return std::max(0.0, 2.0 - 2.0 * std::abs(dot(p, c)));
  }
  static void accumulate(Point<4>& sum, const Point<4>& p, const Point<4>& c) {
    const double s = dot(p, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < 4; ++i) sum[i] += s * p[i];
  }
  static Point<4> finalize(const Point<4>& sum, std::size_t, const Point<4>& old) {
    const double n = std::sqrt(dot(sum, sum));
    if (n < 1e-12) return old;
    Point<4> c{};
    for (std::size_t i = 0; i < 4; ++i) c[i] = sum[i] / n;
    if (c[0] < 0.0)
      for (double& v : c) v = -v;
    return c;
  }
};

template <typename Space>
KMeansResult<Point<Space::dim>> lloyd(const std::vector<Point<Space::dim>>& pts, const KMeansOptions& opt) {
  using P = Point<Space::dim>;
  const std::size_t n = pts.size();
  const std::size_t k = opt.k;
  require(k >= 1, "k-means needs k >= 1");
  if (n < k) {
    fail(ErrorKind::insufficient_data,
         "k-means with k=" + std::to_string(k) + " needs at least " + std::to_string(k) + " points, got " +
             std::to_string(n));
  }

  std::mt19937_64 rng(opt.seed);
  std::vector<P> centers;
  centers.reserve(k);

  // k-means++ seeding.
  centers.push_back(pts[rng() % n]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = Space::dist2(pts[i], centers[0]);
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double r = unit_uniform(rng()) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng() % n;
    }
    centers.push_back(pts[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], Space::dist2(pts[i], centers.back()));
  }

  std::vector<std::size_t> assign(n, 0);
  std::vector<double> best(n);
  auto assign_all = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      double bd = std::numeric_limits<double>::infinity();
      std::size_t bc = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = Space::dist2(pts[i], centers[c]);
        if (d < bd) {
          bd = d;
          bc = c;
        }
      }
      assign[i] = bc;
      best[i] = bd;
    }
  };

  KMeansResult<P> res;
  for (int it = 0; it < opt.max_iterations; ++it) {
    assign_all();
    std::vector<P> sums(k, P{});
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      Space::accumulate(sums[assign[i]], pts[i], centers[assign[i]]);
      ++counts[assign[i]];
    }
    std::vector<P> next(k);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        next[c] = Space::finalize(sums[c], counts[c], centers[c]);
        continue;
      }
      // Empty cluster: steal the point that is currently worst served.
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (best[i] > best[far]) far = i;
      next[c] = pts[far];
      best[far] = 0.0;
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(Space::dist2(next[c], centers[c])));
    centers = std::move(next);
    res.iterations = it + 1;
    if (shift < opt.tolerance) {
      res.converged = true;
      break;
    }
  }
  assign_all();
  res.centroids = std::move(centers);
  res.assignment = std::move(assign);
  return res;
}

}  // namespace

KMeansResult<Vec3> kmeans_translation(std::span<const Vec3> points, const KMeansOptions& opt) {
  std::vector<Point<3>> pts;
  pts.reserve(points.size());
  for (const auto& p : points) pts.push_back({p.x, p.y, p.z});
  auto r = lloyd<EuclideanSpace>(pts, opt);
  KMeansResult<Vec3> out;
  for (const auto& c : r.centroids) out.centroids.push_back({c[0], c[1], c[2]});
  out.assignment = std::move(r.assignment);
  out.iterations = r.iterations;
  out.converged = r.converged;
  return out;
}

KMeansResult<Rotation> kmeans_rotation(std::span<const Rotation> points, const KMeansOptions& opt) {
  std::vector<Point<4>> pts;
  pts.reserve(points.size());
  for (const auto& q : points) pts.push_back(q.wxyz());
  auto r = lloyd<QuaternionSpace>(pts, opt);
  KMeansResult<Rotation> out;
  for (const auto& c : r.centroids) out.centroids.push_back(Rotation::from_wxyz(c[0], c[1], c[2], c[3]));
  out.assignment = std::move(r.assignment);
  out.iterations = r.iterations;
  out.converged = r.converged;
  return out;
}

}  // namespace actok

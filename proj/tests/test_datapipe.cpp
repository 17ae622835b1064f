#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "actok/dedup.hpp"
#include "actok/episode.hpp"
#include "actok/error.hpp"
#include "actok/mirror.hpp"
#include "actok/serialization.hpp"
#include "actok/synth.hpp"
#include "oracles.hpp"

using namespace actok;

namespace {

Episode path_episode(const std::string& id, const std::vector<Vec3>& left, const std::vector<Vec3>& right) {
  Episode ep;
  ep.id = id;
  ep.instruction = "stack the cups";
  ep.subtask = "grasp";
  for (std::size_t k = 0; k < left.size(); ++k) {
    RobotState s;
    s.timestamp = double(k);
    s.left.position = left[k];
    s.right.position = right[k];
    ep.frames.push_back(s);
  }
  return ep;
}

// Liang-Barsky: does the segment cross the open box (x0, x1) x (y0, y1)?
bool crosses_box(double ax, double ay, double bx, double by, double x0, double y0, double x1, double y1) {
  double t0 = 0, t1 = 1;
  const double dx = bx - ax, dy = by - ay;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {ax - x0, x1 - ax, ay - y0, y1 - ay};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0) {
      if (q[i] <= 0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
  }
  return t0 < t1;
}

}  // namespace

TEST_CASE("episode JSONL round trip is bit-faithful") {
  auto eps = synth_corpus(6, 41);
  eps[2].mirror_flag = true;
  eps[3].instruction = "move the \"red\" cup, then stop\n";
  std::ostringstream out;
  write_episodes(out, eps);
  std::istringstream in(out.str());
  const auto back = read_episodes(in);
  REQUIRE(back.size() == eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(back[i] == eps[i]);

  std::istringstream empty("");
  CHECK(read_episodes(empty).empty());
  std::istringstream blanks("\n  \n");
  CHECK(read_episodes(blanks).empty());
}

TEST_CASE("malformed episode lines are named") {
  const auto eps = synth_corpus(3, 42);
  std::ostringstream out;
  write_episodes(out, eps);
  std::string text = out.str();
  const auto second = text.find('\n') + 1;
  auto third_line_text = [&](const std::string& replacement) {
    std::string t = text;
    const auto third = t.find('\n', second) + 1;
    const auto end = t.find('\n', third);
    t.replace(third, end - third, replacement);
    return t;
  };
  auto error_of = [](const std::string& t) -> std::pair<ErrorKind, std::string> {
    std::istringstream in(t);
    try {
      read_episodes(in);
    } catch (const Error& e) {
      return {e.kind(), e.what()};
    }
    return {ErrorKind::io, "no error"};
  };
  auto [k1, m1] = error_of(third_line_text("{not json"));
  CHECK(k1 == ErrorKind::validation);
  CHECK(m1.rfind("line 3:", 0) == 0);

  auto j = to_json(eps[2]);
  j["frames"][4]["left_gripper"] = 1.5;
  auto [k2, m2] = error_of(third_line_text(j.dump()));
  CHECK(k2 == ErrorKind::validation);
  CHECK(m2.find("line 3") != std::string::npos);
  CHECK(m2.find("gripper") != std::string::npos);

  j = to_json(eps[2]);
  j["format_version"] = 7;
  CHECK(error_of(third_line_text(j.dump())).first == ErrorKind::version_mismatch);

  j = to_json(eps[2]);
  j["frames"][5]["t"] = j["frames"][4]["t"];
  CHECK(error_of(third_line_text(j.dump())).second.find("not increasing") != std::string::npos);

  j = to_json(eps[2]);
  j["frames"] = nlohmann::json::array();
  CHECK(error_of(third_line_text(j.dump())).first == ErrorKind::validation);

  j = to_json(eps[2]);
  j["frames"][0]["left"]["q"] = {2.0, 0.0, 0.0, 0.0};
  CHECK(error_of(third_line_text(j.dump())).first == ErrorKind::validation);

  CHECK_THROWS_AS(read_episodes(std::string("/nonexistent/episodes.jsonl")), Error);
}

TEST_CASE("rasterize basics") {
  const auto one = path_episode("a", {{0.3, 0.4, 0.5}}, {{0.3, 0.4, 0.5}});
  for (auto plane : kPlanes) {
    const auto g = rasterize(one, EndEffector::left, plane, 0.05);
    CHECK(g.n_occupied == 1);
    CHECK(std::count(g.occupied.begin(), g.occupied.end(), 1) == 1);
  }

  // A straight run of L = 1 from a cell corner with 0.25 cells: ceil(L / c) + 1 cells.
  const auto run = path_episode("b", {{0, 0.1, 0.1}, {1.0, 0.1, 0.1}}, {{0, 0.1, 0.1}, {0, 0.1, 0.1}});
  const auto g = rasterize(run, EndEffector::left, Plane::xy, 0.25);
  CHECK(g.frame.nu == 5);
  CHECK(g.frame.nv == 1);
  CHECK(g.n_occupied == 5);

  // Started mid-cell, the same length covers one cell fewer.
  const auto off = path_episode("c", {{0.1, 0.1, 0.1}, {0.6, 0.1, 0.1}}, {{0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}});
  CHECK(rasterize(off, EndEffector::left, Plane::xy, 0.25).n_occupied == 3);

  const auto g2 = rasterize(run, EndEffector::left, Plane::xy, 0.25);
  CHECK(g2.occupied == g.occupied);
  CHECK(g.origin().x == 0.0);
}

TEST_CASE("rasterize marks exactly the cells each segment crosses") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-1, 1);
  const double cell = 0.25;
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<Vec3> path;
    const int n = 2 + int(rng() % 6);
    for (int k = 0; k < n; ++k) path.push_back({u(rng), u(rng), u(rng)});
    const auto ep = path_episode("r", path, path);
    for (auto plane : kPlanes) {
      const auto g = rasterize(ep, EndEffector::left, plane, cell);
      std::vector<std::uint8_t> expect(g.occupied.size(), 0);
      auto proj = [&](const Vec3& p) {
        return plane == Plane::xy ? std::pair{p.x, p.y} : plane == Plane::xz ? std::pair{p.x, p.z} : std::pair{p.y, p.z};
      };
      for (int k = 0; k < n; ++k) {
        auto [bu, bv] = proj(path[k]);
        auto [au, av] = k == 0 ? proj(path[0]) : proj(path[k - 1]);
        for (std::size_t iv = 0; iv < g.frame.nv; ++iv) {
          for (std::size_t iu = 0; iu < g.frame.nu; ++iu) {
            const double x0 = g.frame.origin_u + double(iu) * cell, y0 = g.frame.origin_v + double(iv) * cell;
            const bool hit = k == 0 ? (au >= x0 && au < x0 + cell && av >= y0 && av < y0 + cell)
                                    : crosses_box(au, av, bu, bv, x0, y0, x0 + cell, y0 + cell);
            if (hit) expect[iv * g.frame.nu + iu] = 1;
          }
        }
      }
      CHECK(g.occupied == expect);
      CHECK(g.n_occupied == std::size_t(std::count(expect.begin(), expect.end(), 1)));
    }
  }
}

TEST_CASE("grid_distance") {
  GridFrame f;
  f.nu = 4;
  f.nv = 2;
  OccupancyGrid a{f, std::vector<std::uint8_t>(8, 0), 0}, b = a;
  CHECK(grid_distance(a, b) == 0.0);
  for (int i : {0, 1, 2, 3}) a.occupied[i] = 1;
  for (int i : {1, 2, 3, 4}) b.occupied[i] = 1;
  a.n_occupied = b.n_occupied = 4;
  CHECK(grid_distance(a, b) == 0.5);
  CHECK(grid_distance(a, a) == 0.0);

  OccupancyGrid c{f, std::vector<std::uint8_t>(8, 0), 4};
  for (int i : {4, 5, 6, 7}) c.occupied[i] = 1;
  CHECK(grid_distance(a, c) == 2.0);

  auto other = c;
  other.frame.cell_size = 0.1;
  CHECK_THROWS_AS(grid_distance(a, other), Error);
}

TEST_CASE("grid_distance matches the XOR bit-count oracle") {
  std::mt19937_64 rng(44);
  for (int rep = 0; rep < 1000; ++rep) {
    GridFrame f;
    f.nu = 1 + rng() % 40;
    f.nv = 1 + rng() % 40;
    const double pa = std::uniform_real_distribution<double>(0, 1)(rng), pb = std::uniform_real_distribution<double>(0, 1)(rng);
    OccupancyGrid a{f, {}, 0}, b{f, {}, 0};
    for (std::size_t i = 0; i < f.nu * f.nv; ++i) {
      a.occupied.push_back(std::bernoulli_distribution(pa)(rng));
      b.occupied.push_back(std::bernoulli_distribution(pb)(rng));
      a.n_occupied += a.occupied.back();
      b.n_occupied += b.occupied.back();
    }
    const double d = grid_distance(a, b);
    CHECK(d == oracle::xor_distance(a.occupied, b.occupied));
    CHECK(d == grid_distance(b, a));
    CHECK(grid_distance(a, a) == 0.0);
    CHECK(d >= 0.0);
    CHECK(d <= 2.0);
  }
}

TEST_CASE("dedup removes exact duplicates and keeps distinct episodes") {
  const auto eps = synth_corpus(8, 45, {}, 1);
  const auto rep = dedup(eps, {});
  CHECK(rep.removed.empty());
  CHECK(rep.kept.size() == 8);

  auto doubled = eps;
  for (auto e : eps) {
    e.id += "-copy";
    doubled.push_back(e);
  }
  const auto rep2 = dedup(doubled, {});
  REQUIRE(rep2.removed.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(rep2.removed[i].id == eps[i].id + "-copy");
    CHECK(rep2.removed[i].matched_id == eps[i].id);
    CHECK(rep2.removed[i].distance == 0.0);
  }
}

TEST_CASE("dedup compares only within an instruction/subtask group") {
  auto eps = synth_corpus(2, 46, {}, 1);
  eps.push_back(eps[0]);
  eps.back().id = "same-motion-other-task";
  eps.back().subtask = "place";
  const auto rep = dedup(eps, {});
  CHECK(rep.removed.empty());
}

TEST_CASE("dedup agrees with an all-pairs scan") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 30; ++rep) {
    // Three noisy copies of one path plus a few unrelated ones.
    auto base = synth_corpus(1, rng(), {}, 1)[0];
    std::vector<Episode> eps;
    const int copies = 3, others = 1 + int(rng() % 4);
    for (int c = 0; c < copies; ++c) {
      Episode e = base;
      e.id = "copy" + std::to_string(c);
      for (auto& f : e.frames) {
        f.left.position += Vec3{g(rng), g(rng), g(rng)} * 0.002;
        f.right.position += Vec3{g(rng), g(rng), g(rng)} * 0.002;
      }
      eps.push_back(e);
    }
    for (int o = 0; o < others; ++o) {
      auto e = synth_corpus(1, rng(), {}, 1)[0];
      e.id = "other" + std::to_string(o);
      eps.push_back(e);
    }
    std::shuffle(eps.begin(), eps.end(), rng);

    const double threshold = 0.2;
    const auto report = dedup(eps, {0.05, threshold, 2});

    std::array<GridFrame, 3> frames;
    for (int p = 0; p < 3; ++p) frames[p] = union_frame(eps, kPlanes[p], 0.05);
    std::vector<EpisodeGrids> grids;
    for (const auto& e : eps) grids.push_back(episode_grids(e, frames));
    const std::size_t n = eps.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0;
        for (int k = 0; k < 6; ++k) s += oracle::xor_distance(grids[i][k].occupied, grids[j][k].occupied);
        d[i][j] = s / 6;
      }
    std::vector<std::size_t> kept;
    std::vector<std::string> removed;
    for (std::size_t i = 0; i < n; ++i) {
      bool dup = false;
      for (auto k : kept) dup |= d[i][k] < threshold;
      if (dup) {
        removed.push_back(eps[i].id);
      } else {
        kept.push_back(i);
      }
    }
    std::vector<std::string> kept_ids;
    for (auto k : kept) kept_ids.push_back(eps[k].id);
    CHECK(report.kept == kept_ids);
    REQUIRE(report.removed.size() == removed.size());
    for (std::size_t r = 0; r < removed.size(); ++r) {
      CHECK(report.removed[r].id == removed[r]);
      CHECK(report.removed[r].distance < threshold);
    }
    CHECK(report.kept.size() + report.removed.size() == n);
  }
}

TEST_CASE("three near-identical episodes and one distinct: two removed") {
  auto base = synth_corpus(1, 48, {}, 1)[0];
  std::vector<Episode> eps;
  for (int c = 0; c < 3; ++c) {
    Episode e = base;
    e.id = "near" + std::to_string(c);
    for (auto& f : e.frames) f.left.position += Vec3{0.001 * c, 0, 0};
    eps.push_back(e);
  }
  auto far = synth_corpus(1, 49, {}, 1)[0];
  far.id = "far";
  eps.push_back(far);
  const auto rep = dedup(eps, {0.05, 0.2, 1});
  CHECK(rep.kept == std::vector<std::string>{"near0", "far"});
  REQUIRE(rep.removed.size() == 2);
  CHECK(rep.removed[0].matched_id == "near0");
  CHECK(rep.removed[1].matched_id == "near0");
}

TEST_CASE("greedy dedup count can drop when the threshold rises") {
  // In input order A, B, C, D: d(A,B) = 0.15, d(B,C) = d(B,D) = 0.1,
  // d(C,D) = 0.2, d(A,C) = d(A,D) = 0.25. At 0.12 B survives and absorbs C
  // and D; at 0.2 B goes and nothing is left within reach of C or D.
  GridFrame f;
  f.nu = 130;
  f.nv = 1;
  auto grid = [&](std::initializer_list<int> drop, std::initializer_list<int> add) {
    OccupancyGrid g{f, std::vector<std::uint8_t>(130, 0), 40};
    for (int i = 0; i < 40; ++i) g.occupied[i] = 1;
    for (int i : drop) g.occupied[i] = 0;
    for (int i : add) g.occupied[i] = 1;
    return g;
  };
  const auto A = grid({0, 1, 2}, {100, 101, 102});
  const auto B = grid({}, {});
  const auto C = grid({3, 4}, {110, 111});
  const auto D = grid({5, 6}, {120, 121});
  CHECK(grid_distance(A, B) == 0.15);
  CHECK(grid_distance(B, C) == 0.1);
  CHECK(grid_distance(B, D) == 0.1);
  CHECK(grid_distance(C, D) == 0.2);
  CHECK(grid_distance(A, C) == 0.25);
  auto removed = [&](double th) {
    std::vector<const OccupancyGrid*> kept;
    int n = 0;
    for (const auto* g : {&A, &B, &C, &D}) {
      bool dup = false;
      for (const auto* k : kept) dup |= grid_distance(*g, *k) < th;
      if (dup) {
        ++n;
      } else {
        kept.push_back(g);
      }
    }
    return n;
  };
  CHECK(removed(0.12) == 2);
  CHECK(removed(0.2) == 1);
}

TEST_CASE("mirroring negates world y and swaps the arms") {
  Episode ep;
  ep.id = "e1";
  ep.instruction = "Pick the cup with the LEFT hand, then move right";
  ep.subtask = "leftmost bin";
  RobotState s;
  s.right.position = {0.4, -0.2, 0.1};
  s.left.position = {0.4, 0.25, 0.0};
  s.left_gripper = 0.1;
  s.right_gripper = 0.9;
  ep.frames = {s};
  const auto m = mirror_episode(ep);
  CHECK(m.frames[0].left.position.y == doctest::Approx(0.2));
  CHECK(m.frames[0].right.position.y == doctest::Approx(-0.25));
  CHECK(m.frames[0].left_gripper == 0.9);
  CHECK(m.frames[0].right_gripper == 0.1);
  CHECK(m.mirror_flag);
  CHECK(m.id == "e1~mirror");
  CHECK(m.instruction == "Pick the cup with the RIGHT hand, then move left");
  CHECK(m.subtask == "rightmost bin");
  const auto back = mirror_episode(m);
  CHECK(back.id == "e1");
  CHECK(!back.mirror_flag);
  CHECK(back.instruction == ep.instruction);
}

TEST_CASE("mirror_text") {
  CHECK(mirror_text("left") == "right");
  CHECK(mirror_text("Right, LEFT; left-right") == "Left, RIGHT; right-left");
  CHECK(mirror_text("leftover bright cleft") == "leftover bright cleft");
  CHECK(mirror_text("LeFt") == "LeFt");
  CHECK(mirror_text("turn leftward") == "turn rightward");
  const Lexicon custom = {{"port", "starboard"}};
  CHECK(mirror_text("Port side, left", custom) == "Starboard side, left");
  CHECK(mirror_text("") == "");
}

TEST_CASE("mirrored rotations equal M R M in the world frame") {
  std::mt19937_64 rng(50);
  const Eigen::Matrix3d M = Eigen::Vector3d(1, -1, 1).asDiagonal();
  MirrorFrames frames{testing::random_pose(rng, 0.1), testing::random_pose(rng, 0.3), testing::random_pose(rng, 0.3)};
  for (int rep = 0; rep < 200; ++rep) {
    Episode ep;
    ep.id = "x";
    RobotState s;
    s.torso = testing::random_pose(rng);
    s.left = testing::random_pose(rng);
    s.right = testing::random_pose(rng);
    ep.frames = {s};
    const auto m = mirror_episode(ep, frames);
    auto world = [](const Pose& base, const Pose& p) {
      return Eigen::Matrix3d(testing::eigen(base.orientation).toRotationMatrix() *
                             testing::eigen(p.orientation).toRotationMatrix());
    };
    CHECK((world(frames.left, m.frames[0].left) - M * world(frames.right, s.right) * M).norm() < 1e-9);
    CHECK((world(frames.right, m.frames[0].right) - M * world(frames.left, s.left) * M).norm() < 1e-9);
    CHECK((world(frames.torso, m.frames[0].torso) - M * world(frames.torso, s.torso) * M).norm() < 1e-9);
  }
}

TEST_CASE("mirror_episode is an involution") {
  std::mt19937_64 rng(51);
  MirrorFrames frames{testing::random_pose(rng, 0.1), testing::random_pose(rng, 0.3), testing::random_pose(rng, 0.3)};
  for (const auto& ep : synth_corpus(30, 52)) {
    const auto back = mirror_episode(mirror_episode(ep, frames), frames);
    CHECK(back.id == ep.id);
    CHECK(back.instruction == ep.instruction);
    CHECK(back.mirror_flag == ep.mirror_flag);
    REQUIRE(back.frames.size() == ep.frames.size());
    for (std::size_t k = 0; k < ep.frames.size(); ++k) {
      for (auto e : kEndEffectors) {
        CHECK(distance(back.frames[k].pose(e).position, ep.frames[k].pose(e).position) < 1e-9);
        CHECK(testing::quat_gap(back.frames[k].pose(e).orientation, ep.frames[k].pose(e).orientation) < 1e-9);
      }
      CHECK(back.frames[k].left_gripper == ep.frames[k].left_gripper);
      CHECK(back.frames[k].timestamp == ep.frames[k].timestamp);
    }
  }
}

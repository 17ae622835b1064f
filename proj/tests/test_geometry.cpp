#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "actok/error.hpp"
#include "actok/geometry.hpp"
#include "support.hpp"

using namespace actok;
using testing::eigen;
using testing::random_pose;
using testing::random_rotation;
using testing::random_vec;

constexpr double kPi = std::numbers::pi;

TEST_CASE("rotation_distance basics") {
  const auto id = Rotation::identity();
  CHECK(rotation_distance(id, id) == 0.0);
  CHECK(rotation_distance(id, Rotation::from_axis_angle({0, 0, 1}, kPi / 2)) == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(rotation_distance(id, Rotation::from_axis_angle({1, 0, 0}, kPi)) == doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("rotation_distance matches the matrix logarithm") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_rotation(rng), b = random_rotation(rng);
    const double d = rotation_distance(a, b);
    CHECK(d == doctest::Approx(testing::matrix_log_angle(a, b)).epsilon(1e-9));
    CHECK(d >= 0.0);
    CHECK(d <= kPi);
  }
}

TEST_CASE("rotation_distance is a metric up to sign") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_rotation(rng), b = random_rotation(rng), c = random_rotation(rng);
    CHECK(rotation_distance(a, b) == rotation_distance(b, a));
    CHECK(rotation_distance(a, c) <= rotation_distance(a, b) + rotation_distance(b, c) + 1e-7);
    const auto q = a.wxyz();
    // -q is the same rotation; from_wxyz folds it back into the w >= 0 hemisphere.
    CHECK(rotation_distance(a, Rotation::from_wxyz(-q[0], -q[1], -q[2], -q[3])) < 1e-7);
  }
}

TEST_CASE("from_wxyz normalizes nearly unit input and rejects the rest") {
  const auto q = Rotation::from_wxyz(1.0 + 5e-7, 0, 0, 0);
  CHECK(q.w() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(Rotation::from_wxyz(1.1, 0, 0, 0), Error);
  CHECK_THROWS_AS(Rotation::from_wxyz(0, 0, 0, 0), Error);
  CHECK(Rotation::from_wxyz(-1, 0, 0, 0).w() == 1.0);
}

TEST_CASE("slerp endpoints, midpoint and constant speed") {
  const auto id = Rotation::identity();
  const auto quarter = Rotation::from_axis_angle({0, 0, 1}, kPi / 2);
  CHECK(testing::quat_gap(slerp(id, quarter, 0.5), Rotation::from_axis_angle({0, 0, 1}, kPi / 4)) < 1e-12);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_rotation(rng), b = random_rotation(rng);
    CHECK(testing::quat_gap(slerp(a, a, 0.5), a) < 1e-12);
    CHECK(testing::quat_gap(slerp(a, b, 0.0), a) < 1e-12);
    CHECK(testing::quat_gap(slerp(a, b, 1.0), b) < 1e-12);
    const double d = rotation_distance(a, b);
    for (double t : {0.1, 0.25, 0.5, 0.9}) {
      const auto s = slerp(a, b, t);
      CHECK(rotation_distance(a, s) == doctest::Approx(t * d).epsilon(1e-7).scale(1.0));
      CHECK(rotation_distance(s, b) == doctest::Approx((1 - t) * d).epsilon(1e-7).scale(1.0));
    }
  }
  CHECK_THROWS_AS(slerp(id, quarter, 1.5), Error);
  CHECK_THROWS_AS(slerp(id, quarter, -0.1), Error);
}

TEST_CASE("slerp agrees with Eigen") {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_rotation(rng), b = random_rotation(rng);
    const double t = std::uniform_real_distribution<double>(0, 1)(rng);
    const auto ours = slerp(a, b, t);
    const auto ref = eigen(a).slerp(t, eigen(b));
    CHECK(testing::quat_gap(ours, Rotation::from_wxyz(ref.w(), ref.x(), ref.y(), ref.z())) < 1e-9);
  }
}

TEST_CASE("point_to_line_distance") {
  CHECK(point_to_line_distance({0, 1, 0}, {0, 0, 0}, {1, 0, 0}) == 1.0);
  CHECK(point_to_line_distance({5, 0, 0}, {0, 0, 0}, {1, 0, 0}) == 0.0);
  // The line is infinite, not the segment.
  CHECK(point_to_line_distance({-3, 2, 0}, {0, 0, 0}, {1, 0, 0}) == doctest::Approx(2.0));
  CHECK(point_to_line_distance({3, 4, 0}, {0, 0, 0}, {0, 0, 0}) == doctest::Approx(5.0));

  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto p = eigen(random_vec(rng)), s = eigen(random_vec(rng)), e = eigen(random_vec(rng));
    const double oracle = (p - s).cross(e - s).norm() / (e - s).norm();
    CHECK(point_to_line_distance({p.x(), p.y(), p.z()}, {s.x(), s.y(), s.z()}, {e.x(), e.y(), e.z()}) ==
          doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("apply_delta and delta_between") {
  const Pose origin;
  const auto moved = apply_delta(origin, {{1, 0, 0}, Rotation::identity()});
  CHECK(moved.position == Vec3{1, 0, 0});
  CHECK(moved.orientation == Rotation::identity());

  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_pose(rng), b = random_pose(rng);
    const auto same = apply_delta(a, {});
    CHECK(same.position == a.position);
    CHECK(testing::quat_gap(same.orientation, a.orientation) < 1e-15);

    const auto zero = delta_between(a, a);
    CHECK(zero.d_pos.norm() == 0.0);
    CHECK(zero.d_rot.angle() < 1e-7);

    const auto d = delta_between(a, b);
    const auto back = apply_delta(a, d);
    CHECK(distance(back.position, b.position) < 1e-9);
    CHECK(testing::quat_gap(back.orientation, b.orientation) < 1e-9);

    // World-frame (left) composition.
    const auto ref = (eigen(d.d_rot) * eigen(a.orientation)).normalized();
    CHECK(testing::quat_gap(back.orientation, Rotation::from_wxyz(ref.w(), ref.x(), ref.y(), ref.z())) < 1e-9);

    const DeltaAction random_delta{random_vec(rng, 0.1), random_rotation(rng)};
    const auto recovered = delta_between(a, apply_delta(a, random_delta));
    CHECK(distance(recovered.d_pos, random_delta.d_pos) < 1e-9);
    CHECK(testing::quat_gap(recovered.d_rot, random_delta.d_rot) < 1e-9);
  }

  const Pose a{{0.1, 0.2, 0.3}, Rotation::from_axis_angle({1, 2, 3}, 0.7)};
  const Pose b{{0.4, -0.2, 0.0}, a.orientation};
  CHECK(delta_between(a, b).d_rot.angle() < 1e-7);
}

TEST_CASE("mirror_pose negates world y") {
  const Pose p{{0.4, 0.3, 0.2}, Rotation::identity()};
  const auto m = mirror_pose(p, {}, {});
  CHECK(m.position.x == 0.4);
  CHECK(m.position.y == -0.3);
  CHECK(m.position.z == 0.2);

  // A rotation about y is its own mirror image; so is any pose on the plane.
  const Pose on_plane{{0.5, 0.0, 0.1}, Rotation::from_axis_angle({0, 1, 0}, 0.8)};
  const auto same = mirror_pose(on_plane, {}, {});
  CHECK(distance(same.position, on_plane.position) < 1e-15);
  CHECK(testing::quat_gap(same.orientation, on_plane.orientation) < 1e-15);
}

TEST_CASE("mirror_pose equals M R M in matrix form") {
  std::mt19937_64 rng(13);
  const Eigen::Matrix3d M = Eigen::Vector3d(1, -1, 1).asDiagonal();
  for (int i = 0; i < 500; ++i) {
    const auto src = random_pose(rng), dst = random_pose(rng), p = random_pose(rng, 0.5);
    const auto m = mirror_pose(p, src, dst);

    Eigen::Isometry3d world_src = Eigen::Isometry3d::Identity();
    world_src.linear() = eigen(src.orientation).toRotationMatrix();
    world_src.translation() = eigen(src.position);
    Eigen::Isometry3d world_dst = Eigen::Isometry3d::Identity();
    world_dst.linear() = eigen(dst.orientation).toRotationMatrix();
    world_dst.translation() = eigen(dst.position);
    Eigen::Isometry3d local = Eigen::Isometry3d::Identity();
    local.linear() = eigen(p.orientation).toRotationMatrix();
    local.translation() = eigen(p.position);

    const Eigen::Isometry3d world = world_src * local;
    Eigen::Isometry3d reflected = Eigen::Isometry3d::Identity();
    reflected.linear() = M * world.linear() * M;
    reflected.translation() = M * world.translation();
    const Eigen::Isometry3d expect = world_dst.inverse() * reflected;

    CHECK((eigen(m.position) - expect.translation()).norm() < 1e-9);
    CHECK((eigen(m.orientation).toRotationMatrix() - expect.linear()).norm() < 1e-9);
  }
}

TEST_CASE("mirror_pose with swapped frames is an involution") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_pose(rng), b = random_pose(rng), p = random_pose(rng);
    const auto back = mirror_pose(mirror_pose(p, a, b), b, a);
    CHECK(distance(back.position, p.position) < 1e-9);
    CHECK(testing::quat_gap(back.orientation, p.orientation) < 1e-9);
  }
}

TEST_CASE("operations keep unit quaternions in the w >= 0 hemisphere") {
  std::mt19937_64 rng(15);
  auto unit = [](const Rotation& q) {
    const auto c = q.wxyz();
    return std::abs(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3] - 1.0) < 1e-9 && c[0] >= 0.0;
  };
  for (int i = 0; i < 500; ++i) {
    const auto a = random_rotation(rng), b = random_rotation(rng);
    CHECK(unit(a * b));
    CHECK(unit(a.inverse()));
    CHECK(unit(slerp(a, b, 0.3)));
    CHECK(unit(delta_between({{}, a}, {{}, b}).d_rot));
    CHECK(unit(mirror_pose({{}, a}, {}, {{}, b}).orientation));
    CHECK(unit(Rotation::from_rotation_vector(a.to_rotation_vector())));
    CHECK(testing::quat_gap(Rotation::from_rotation_vector(a.to_rotation_vector()), a) < 1e-9);
    CHECK(testing::quat_gap(Rotation::from_matrix(a.to_matrix()), a) < 1e-9);
  }
}

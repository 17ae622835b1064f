#pragma once

#include <array>
#include <cmath>

namespace actok {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Unit quaternion in the w >= 0 hemisphere. Every constructor and every
/// operation returns the canonical representative, so two Rotations that
/// describe the same element of SO(3) compare equal component-wise (up to
/// the rounding of the operation that produced them).
class Rotation {
 public:
  constexpr Rotation() = default;

  static constexpr Rotation identity() { return Rotation(); }

  /// Accepts any quaternion whose norm is within 1e-6 of one. Inputs that are
  /// already unit to within 1e-12 are stored verbatim (modulo the hemisphere
  /// flip) so that serialized values survive a round trip bit for bit.
  /// Throws actok::Error otherwise.
  static Rotation from_wxyz(double w, double x, double y, double z);

  /// Rotation by `angle` radians about `axis` (need not be normalized).
  /// A zero axis yields the identity.
  static Rotation from_axis_angle(const Vec3& axis, double angle);

  /// Exponential map: direction = axis, length = angle.
  static Rotation from_rotation_vector(const Vec3& rv);

  static Rotation from_matrix(const Matrix3& m);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  std::array<double, 4> wxyz() const { return {w_, x_, y_, z_}; }

  /// Hamilton product: (a * b) applies b first, then a.
  Rotation operator*(const Rotation& o) const;
  Rotation inverse() const;
  Vec3 rotate(const Vec3& v) const;
  Matrix3 to_matrix() const;

  /// Rotation angle in [0, pi].
  double angle() const;
  /// Logarithm map; inverse of from_rotation_vector.
  Vec3 to_rotation_vector() const;

  bool operator==(const Rotation&) const = default;

 private:
  Rotation(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}
  static Rotation normalized(double w, double x, double y, double z);

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

struct Pose {
  Vec3 position;
  Rotation orientation;

  bool operator==(const Pose&) const = default;
};

/// Relative motion between two poses. The rotation is expressed in the world
/// frame: apply_delta left-multiplies it onto the orientation.
struct DeltaAction {
  Vec3 d_pos;
  Rotation d_rot;
};

enum class EndEffector { torso, left, right };
inline constexpr std::array<EndEffector, 3> kEndEffectors = {EndEffector::torso, EndEffector::left,
                                                             EndEffector::right};

/// One frame of a whole-body trajectory. Gripper openings are clamped to [0, 1].
struct RobotState {
  Pose torso;
  Pose left;
  Pose right;
  double left_gripper = 0.0;
  double right_gripper = 0.0;
  double timestamp = 0.0;

  const Pose& pose(EndEffector e) const {
    return e == EndEffector::torso ? torso : (e == EndEffector::left ? left : right);
  }
  Pose& pose(EndEffector e) {
    return e == EndEffector::torso ? torso : (e == EndEffector::left ? left : right);
  }
  bool operator==(const RobotState&) const = default;
};

inline double clamp_gripper(double g) { return g < 0.0 ? 0.0 : (g > 1.0 ? 1.0 : g); }

/// Tag stored in library files so decoding never has to guess the side.
inline constexpr const char* kCompositionConvention = "world_frame_left";

/// Geodesic angle between two rotations, in [0, pi].
double rotation_distance(const Rotation& a, const Rotation& b);

/// Constant angular velocity interpolation along the shorter arc.
/// t must lie in [0, 1]; throws otherwise.
Rotation slerp(const Rotation& a, const Rotation& b, double t);

/// slerp(a, b, t) for many t with the per-pair setup done once.
class SlerpPath {
 public:
  SlerpPath(const Rotation& a, const Rotation& b);
  Rotation at(double t) const;

 private:
  Rotation a_, b_;
  std::array<double, 4> u_{};
  double theta_ = 0.0;
  double un_ = 0.0;
};

/// Perpendicular distance from p to the infinite line through seg_start and
/// seg_end; for a zero-length segment the distance to seg_start.
double point_to_line_distance(const Vec3& p, const Vec3& seg_start, const Vec3& seg_end);

Pose apply_delta(const Pose& s, const DeltaAction& d);
DeltaAction delta_between(const Pose& a, const Pose& b);

/// Rigid transform composition: (a ∘ b) maps b's local frame through a.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

/// Reflect a pose through the world x–z plane.
///
/// `p` is expressed in the frame `world_from_local`; the result is expressed
/// in `target_world_from_local`. The world position has its y component
/// negated and the world rotation R becomes M R M with M = diag(1, -1, 1).
/// Mirroring with the two frames swapped is the inverse operation.
Pose mirror_pose(const Pose& p, const Pose& world_from_local, const Pose& target_world_from_local);

}  // namespace actok

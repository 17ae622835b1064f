#include "actok/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <string>

#include "actok/error.hpp"

namespace actok {

namespace {

// Picks the w >= 0 representative; for w == 0 the first non-zero vector
// component is made positive so the choice is still unique.
void canonicalize(double& w, double& x, double& y, double& z) {
  bool flip = w < 0.0;
  if (w == 0.0) {
    if (x != 0.0) {
      flip = x < 0.0;
    } else if (y != 0.0) {
      flip = y < 0.0;
    } else {
      flip = z < 0.0;
    }
  }
  if (flip) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
}

}  // namespace

Rotation Rotation::normalized(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  canonicalize(w, x, y, z);
  return Rotation(w, x, y, z);
}

Rotation Rotation::from_wxyz(double w, double x, double y, double z) {
  require(std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z),
          "quaternion has non-finite components");
  const double n2 = w * w + x * x + y * y + z * z;
  if (std::abs(n2 - 1.0) <= 1e-12) {
    canonicalize(w, x, y, z);
    return Rotation(w, x, y, z);
  }
  const double n = std::sqrt(n2);
  if (std::abs(n - 1.0) > 1e-6) {
    fail(ErrorKind::validation, "quaternion norm " + std::to_string(n) + " is not within 1e-6 of 1");
  }
  return normalized(w, x, y, z);
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0 || angle == 0.0) return identity();
  const double s = std::sin(angle / 2.0) / n;
  return normalized(std::cos(angle / 2.0), axis.x * s, axis.y * s, axis.z * s);
}

Rotation Rotation::from_rotation_vector(const Vec3& rv) { return from_axis_angle(rv, rv.norm()); }

Rotation Rotation::from_matrix(const Matrix3& m) {
  // Shepperd's method: branch on the largest diagonal term.
  const double tr = m[0][0] + m[1][1] + m[2][2];
  double w, x, y, z;
  if (tr > 0.0) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    w = 0.25 * s;
    x = (m[2][1] - m[1][2]) / s;
    y = (m[0][2] - m[2][0]) / s;
    z = (m[1][0] - m[0][1]) / s;
  } else if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
    const double s = std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2.0;
    w = (m[2][1] - m[1][2]) / s;
    x = 0.25 * s;
    y = (m[0][1] + m[1][0]) / s;
    z = (m[0][2] + m[2][0]) / s;
  } else if (m[1][1] > m[2][2]) {
    const double s = std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2.0;
    w = (m[0][2] - m[2][0]) / s;
    x = (m[0][1] + m[1][0]) / s;
    y = 0.25 * s;
    z = (m[1][2] + m[2][1]) / s;
  } else {
    const double s = std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2.0;
    w = (m[1][0] - m[0][1]) / s;
    x = (m[0][2] + m[2][0]) / s;
    y = (m[1][2] + m[2][1]) / s;
    z = 0.25 * s;
  }
  return normalized(w, x, y, z);
}

Rotation Rotation::operator*(const Rotation& o) const {
  return normalized(w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
                    w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
                    w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
                    w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_);
}

Rotation Rotation::inverse() const {
  double w = w_, x = -x_, y = -y_, z = -z_;
  canonicalize(w, x, y, z);
  return Rotation(w, x, y, z);
}

Vec3 Rotation::rotate(const Vec3& v) const {
  // v' = v + 2 u × (u × v + w v), u = vector part
  const Vec3 u{x_, y_, z_};
  const Vec3 t = u.cross(v) * 2.0;
  return v + t * w_ + u.cross(t);
}

Matrix3 Rotation::to_matrix() const {
  const double ww = w_ * w_, xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
  const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
  return {{{ww + xx - yy - zz, 2.0 * (xy - wz), 2.0 * (xz + wy)},
           {2.0 * (xy + wz), ww - xx + yy - zz, 2.0 * (yz - wx)},
           {2.0 * (xz - wy), 2.0 * (yz + wx), ww - xx - yy + zz}}};
}

double Rotation::angle() const {
  const double s = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
  return 2.0 * std::atan2(s, std::abs(w_));
}

Vec3 Rotation::to_rotation_vector() const {
  const double s = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
  if (s == 0.0) return {};
  const double a = 2.0 * std::atan2(s, w_);
  return Vec3{x_, y_, z_} * (a / s);
}

double rotation_distance(const Rotation& a_in, const Rotation& b_in) {
  // Fixed argument order keeps the result bitwise symmetric.
  const bool swap = b_in.wxyz() < a_in.wxyz();
  const Rotation& a = swap ? b_in : a_in;
  const Rotation& b = swap ? a_in : b_in;
  // angle of a^-1 b, computed from the half-angle sine/cosine for accuracy
  // near zero, where acos of the dot product loses half the digits.
  const double dw = a.w() * b.w() + a.x() * b.x() + a.y() * b.y() + a.z() * b.z();
  const double dx = a.w() * b.x() - a.x() * b.w() - a.y() * b.z() + a.z() * b.y();
  const double dy = a.w() * b.y() + a.x() * b.z() - a.y() * b.w() - a.z() * b.x();
  const double dz = a.w() * b.z() - a.x() * b.y() + a.y() * b.x() - a.z() * b.w();
  const double s = std::sqrt(dx * dx + dy * dy + dz * dz);
  return 2.0 * std::atan2(s, std::abs(dw));
}

SlerpPath::SlerpPath(const Rotation& a, const Rotation& b) : a_(a), b_(b) {
  const auto qa = a.wxyz();
  auto qb = b.wxyz();
  double d = qa[0] * qb[0] + qa[1] * qb[1] + qa[2] * qb[2] + qa[3] * qb[3];
  if (d < 0.0) {
    for (double& c : qb) c = -c;
    d = -d;
  }
  // Orthogonalize b against a: q(t) = a cos(t θ) + u sin(t θ).
  for (int i = 0; i < 4; ++i) {
    u_[i] = qb[i] - d * qa[i];
    un_ += u_[i] * u_[i];
  }
  un_ = std::sqrt(un_);
  theta_ = std::atan2(un_, d);
}

Rotation SlerpPath::at(double t) const {
  require(t >= 0.0 && t <= 1.0, "slerp parameter must lie in [0, 1]");
  if (t == 0.0) return a_;
  if (t == 1.0) return b_;
  if (un_ < 1e-300) return a_;
  const auto qa = a_.wxyz();
  const double c = std::cos(t * theta_);
  const double s = std::sin(t * theta_) / un_;
  return Rotation::from_wxyz(qa[0] * c + u_[0] * s, qa[1] * c + u_[1] * s, qa[2] * c + u_[2] * s,
                             qa[3] * c + u_[3] * s);
}

Rotation slerp(const Rotation& a, const Rotation& b, double t) { return SlerpPath(a, b).at(t); }

double point_to_line_distance(const Vec3& p, const Vec3& seg_start, const Vec3& seg_end) {
  const Vec3 d = seg_end - seg_start;
  const double len = d.norm();
  if (len == 0.0) return distance(p, seg_start);
  return (p - seg_start).cross(d).norm() / len;
}

Pose apply_delta(const Pose& s, const DeltaAction& d) {
  return {s.position + d.d_pos, d.d_rot * s.orientation};
}

DeltaAction delta_between(const Pose& a, const Pose& b) {
  return {b.position - a.position, b.orientation * a.orientation.inverse()};
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.orientation.rotate(b.position) + a.position, a.orientation * b.orientation};
}

Pose inverse(const Pose& p) {
  const Rotation qi = p.orientation.inverse();
  return {-qi.rotate(p.position), qi};
}

Pose mirror_pose(const Pose& p, const Pose& world_from_local, const Pose& target_world_from_local) {
  const Pose world = compose(world_from_local, p);
  // M R M for M = diag(1,-1,1): the rotation axis is a pseudovector, so it
  // maps to det(M) M a = (-ax, ay, -az) while the angle is unchanged.
  const auto q = world.orientation.wxyz();
  const Pose reflected{{world.position.x, -world.position.y, world.position.z},
                       Rotation::from_wxyz(q[0], -q[1], q[2], -q[3])};
  return compose(inverse(target_world_from_local), reflected);
}

}  // namespace actok

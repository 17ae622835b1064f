#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include <Eigen/Geometry>

#include "actok/geometry.hpp"

namespace testing {

inline actok::Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  double w = n(rng), x = n(rng), y = n(rng), z = n(rng);
  const double s = std::sqrt(w * w + x * x + y * y + z * z);
  return actok::Rotation::from_wxyz(w / s, x / s, y / s, z / s);
}

inline actok::Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline actok::Pose random_pose(std::mt19937_64& rng, double scale = 1.0) {
  return {random_vec(rng, scale), random_rotation(rng)};
}

inline Eigen::Quaterniond eigen(const actok::Rotation& q) { return {q.w(), q.x(), q.y(), q.z()}; }
inline Eigen::Vector3d eigen(const actok::Vec3& v) { return {v.x, v.y, v.z}; }

// Angle between two rotations from the logarithm of R_a^T R_b.
inline double matrix_log_angle(const actok::Rotation& a, const actok::Rotation& b) {
  const Eigen::Matrix3d rel = eigen(a).toRotationMatrix().transpose() * eigen(b).toRotationMatrix();
  return Eigen::AngleAxisd(rel).angle();
}

// Same rotation up to quaternion sign.
inline double quat_gap(const actok::Rotation& a, const actok::Rotation& b) {
  double plus = 0, minus = 0;
  const auto p = a.wxyz(), q = b.wxyz();
  for (int i = 0; i < 4; ++i) {
    plus = std::max(plus, std::abs(p[i] - q[i]));
    minus = std::max(minus, std::abs(p[i] + q[i]));
  }
  return std::min(plus, minus);
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("actok_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing

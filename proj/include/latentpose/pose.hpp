#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "latentpose/tensor.hpp"

namespace latentpose {

inline constexpr std::size_t kDefaultJointCount = 17;

/// Root-relative 3D joint positions, laid out x0 y0 z0 x1 y1 z1 ...
/// Joint 0 is the root and sits exactly at the origin.
class Pose {
 public:
  Pose() = default;
  /// Rejects lengths not divisible by 3, non-finite entries and a non-zero
  /// root.
  explicit Pose(Vector coords);
  /// Same checks, but the root coordinates are overwritten with zeros first.
  static Pose with_root_zeroed(Vector coords);

  std::size_t joint_count() const { return coords_.size() / 3; }
  std::size_t dim() const { return coords_.size(); }
  std::span<const double> coords() const { return coords_; }
  const Vector& values() const { return coords_; }
  std::array<double, 3> joint(std::size_t j) const;

  Pose scaled(double factor) const;

  bool operator==(const Pose&) const = default;

 private:
  Vector coords_;
};

}  // namespace latentpose

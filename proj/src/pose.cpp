#include "latentpose/pose.hpp"

#include <cmath>
#include <string>

#include "latentpose/errors.hpp"

namespace latentpose {

Pose::Pose(Vector coords) : coords_(std::move(coords)) {
  if (coords_.empty() || coords_.size() % 3 != 0) {
    throw DimensionError("pose length must be a positive multiple of 3, got " +
                         std::to_string(coords_.size()));
  }
  for (double v : coords_)
    if (!std::isfinite(v)) throw DomainError("pose contains a non-finite value");
  if (coords_[0] != 0.0 || coords_[1] != 0.0 || coords_[2] != 0.0)
    throw DomainError("pose root joint must be at the origin");
}

Pose Pose::with_root_zeroed(Vector coords) {
  if (coords.size() >= 3) coords[0] = coords[1] = coords[2] = 0.0;
  return Pose(std::move(coords));
}

std::array<double, 3> Pose::joint(std::size_t j) const {
  if (j >= joint_count()) throw DimensionError("joint index out of range");
  return {coords_[3 * j], coords_[3 * j + 1], coords_[3 * j + 2]};
}

Pose Pose::scaled(double factor) const {
  Vector out = coords_;
  for (auto& v : out) v *= factor;
  return Pose(std::move(out));
}

}  // namespace latentpose

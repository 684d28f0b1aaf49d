#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>

#include "latentpose/pose.hpp"
#include "latentpose/skeleton.hpp"
#include "latentpose/tensor.hpp"

namespace latentpose {

/// Orthographic camera. `axes[0]` is the pose axis mapped to image columns
/// (left to right), `axes[1]` the axis mapped to rows (bottom to top); the
/// remaining axis is lost. The projected bounding box is centred in the frame.
struct CameraConfig {
  std::array<std::size_t, 2> axes{0, 2};
  std::size_t image_size = 32;
  double mm_per_pixel = 75.0;
  double thickness = 2.0;  // stroke width in pixels

  void validate() const;
  std::string axes_name() const;  // e.g. "xz"
  static std::array<std::size_t, 2> parse_axes(const std::string& name);
  bool operator==(const CameraConfig&) const = default;
};

/// Grayscale stick figure [1 x size x size] in [0, 1]. Each limb is an
/// anti-aliased capsule: coverage = clamp(thickness/2 + 0.5 - d, 0, 1), d the
/// distance from the pixel centre to the segment; overlapping limbs take the
/// maximum. Throws RangeError naming the first joint that leaves the frame.
Tensor render(const Pose& pose, const SkeletonModel& model,
              const CameraConfig& camera);

/// Binary PGM (P5) of channel 0, values clamped to [0, 1] and scaled to 255.
void write_pgm(const Tensor& image, const std::filesystem::path& path);

}  // namespace latentpose

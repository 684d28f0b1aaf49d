#include "latentpose/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "latentpose/errors.hpp"

namespace latentpose {

void CameraConfig::validate() const {
  if (axes[0] > 2 || axes[1] > 2 || axes[0] == axes[1])
    throw ParameterError("camera: axes must be two distinct axes of x, y, z");
  if (image_size < 16) throw ParameterError("camera: image size must be >= 16");
  if (!(mm_per_pixel > 0.0)) throw ParameterError("camera: mm per pixel must be > 0");
  if (!(thickness > 0.0)) throw ParameterError("camera: line thickness must be > 0");
}

std::string CameraConfig::axes_name() const {
  const char names[] = {'x', 'y', 'z'};
  return {names[axes[0]], names[axes[1]]};
}

std::array<std::size_t, 2> CameraConfig::parse_axes(const std::string& name) {
  if (name.size() != 2) throw ParameterError("camera axes must look like 'xz'");
  std::array<std::size_t, 2> out{};
  for (std::size_t i = 0; i < 2; ++i) {
    const char c = name[i];
    if (c < 'x' || c > 'z') throw ParameterError("camera axes must be drawn from x, y, z");
    out[i] = static_cast<std::size_t>(c - 'x');
  }
  if (out[0] == out[1]) throw ParameterError("camera axes must differ");
  return out;
}

namespace {

double segment_distance(double px, double py, double ax, double ay, double bx,
                        double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
  const double cx = ax + t * dx - px, cy = ay + t * dy - py;
  return std::sqrt(cx * cx + cy * cy);
}

}  // namespace

Tensor render(const Pose& pose, const SkeletonModel& model,
              const CameraConfig& camera) {
  camera.validate();
  if (pose.joint_count() != model.joint_count())
    throw DimensionError("render: pose joint count does not match the skeleton");
  const std::size_t n = pose.joint_count();
  std::vector<double> u(n), v(n);
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  double vmin = umin, vmax = -umin;
  for (std::size_t j = 0; j < n; ++j) {
    const auto p = pose.joint(j);
    u[j] = p[camera.axes[0]];
    v[j] = p[camera.axes[1]];
    umin = std::min(umin, u[j]);
    umax = std::max(umax, u[j]);
    vmin = std::min(vmin, v[j]);
    vmax = std::max(vmax, v[j]);
  }
  const double size = static_cast<double>(camera.image_size);
  const double centre = size / 2.0;
  const double uc = (umin + umax) / 2.0, vc = (vmin + vmax) / 2.0;
  const double margin = camera.thickness / 2.0;
  std::vector<double> col(n), row(n);
  for (std::size_t j = 0; j < n; ++j) {
    col[j] = centre + (u[j] - uc) / camera.mm_per_pixel;
    row[j] = centre - (v[j] - vc) / camera.mm_per_pixel;
    if (col[j] < margin || col[j] > size - margin || row[j] < margin ||
        row[j] > size - margin) {
      throw RangeError("render: joint " + model.joint_names[j] +
                       " falls outside the " + std::to_string(camera.image_size) +
                       "px frame");
    }
  }

  Tensor image({1, camera.image_size, camera.image_size});
  const double reach = camera.thickness / 2.0 + 0.5;
  for (const auto& limb : model.limbs) {
    const double ax = col[limb.parent], ay = row[limb.parent];
    const double bx = col[limb.child], by = row[limb.child];
    const auto lo_x = static_cast<std::ptrdiff_t>(std::floor(std::min(ax, bx) - reach));
    const auto hi_x = static_cast<std::ptrdiff_t>(std::ceil(std::max(ax, bx) + reach));
    const auto lo_y = static_cast<std::ptrdiff_t>(std::floor(std::min(ay, by) - reach));
    const auto hi_y = static_cast<std::ptrdiff_t>(std::ceil(std::max(ay, by) + reach));
    const auto last = static_cast<std::ptrdiff_t>(camera.image_size) - 1;
    for (auto y = std::max<std::ptrdiff_t>(0, lo_y); y <= std::min(last, hi_y); ++y) {
      for (auto x = std::max<std::ptrdiff_t>(0, lo_x); x <= std::min(last, hi_x); ++x) {
        const double d = segment_distance(static_cast<double>(x) + 0.5,
                                          static_cast<double>(y) + 0.5, ax, ay, bx, by);
        const double coverage = std::clamp(reach - d, 0.0, 1.0);
        double& px = image(0, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        px = std::max(px, coverage);
      }
    }
  }
  return image;
}

void write_pgm(const Tensor& image, const std::filesystem::path& path) {
  if (image.rank() != 3) throw DimensionError("write_pgm: expected [C x H x W]");
  const std::size_t h = image.dim(1), w = image.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P5\n" << w << " " << h << "\n255\n";
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double v = std::clamp(image(0, y, x), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace latentpose

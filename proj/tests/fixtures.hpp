#pragma once

#include <vector>

#include "latentpose/pose.hpp"
#include "latentpose/rng.hpp"
#include "latentpose/skeleton.hpp"

namespace fixture {

/// Synthetic poses across every default subject and action, in metres.
inline std::vector<latentpose::Vector> poses_m(std::size_t n, std::uint64_t seed) {
  using namespace latentpose;
  const SkeletonModel base = SkeletonModel::default_human();
  const auto actions = default_actions();
  const auto subjects = default_subjects();
  RngStream rng(seed);
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i) {
    const SkeletonModel m = base.scaled(subjects[i % subjects.size()].scale)
                                .with_ranges(actions[i % actions.size()].ranges);
    out.push_back(sample_pose(m, rng).scaled(1e-3).values());
  }
  return out;
}

}  // namespace fixture

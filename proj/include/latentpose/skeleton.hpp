#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "latentpose/pose.hpp"
#include "latentpose/rng.hpp"

namespace latentpose {

/// Per-joint Euler angle bounds in radians, (x, y, z) order.
struct AngleRange {
  std::array<double, 3> min{0.0, 0.0, 0.0};
  std::array<double, 3> max{0.0, 0.0, 0.0};

  static AngleRange fixed() { return {}; }
  bool operator==(const AngleRange&) const = default;
};

struct Limb {
  std::size_t parent = 0;
  std::size_t child = 0;
  std::string name;
  bool operator==(const Limb&) const = default;
};

/// Limb indices (into SkeletonModel::limbs) of each body part; the full body
/// is every limb.
struct BodyPartitions {
  std::vector<std::size_t> lower;
  std::vector<std::size_t> upper;
  bool operator==(const BodyPartitions&) const = default;
};

/// Joint tree driving forward kinematics. Joint 0 is the root; every other
/// joint has a parent with a smaller index, a bone of `bone_lengths[j]` mm
/// pointing along `rest_directions[j]` in the parent frame at zero angles,
/// and a local rotation Rz * Ry * Rx drawn from `angle_ranges[j]`. The root's
/// range sets the global orientation.
struct SkeletonModel {
  std::string name;
  std::vector<std::string> joint_names;
  std::vector<int> parents;  // -1 for the root
  std::vector<double> bone_lengths;  // mm, entry 0 unused
  std::vector<std::array<double, 3>> rest_directions;
  std::vector<AngleRange> angle_ranges;
  std::vector<Limb> limbs;  // one per non-root joint, ordered by child
  BodyPartitions partitions;

  std::size_t joint_count() const { return parents.size(); }
  std::size_t pose_dim() const { return 3 * parents.size(); }
  void validate() const;

  SkeletonModel scaled(double factor) const;
  SkeletonModel with_ranges(std::vector<AngleRange> ranges) const;

  /// 17-joint human topology: pelvis root, spine-thorax-neck-head chain,
  /// 3-joint legs and arms hanging from hips and shoulders.
  static SkeletonModel default_human();
};

using JointAngles = std::vector<std::array<double, 3>>;

/// Root-relative joint positions for explicit per-joint angles.
Pose forward_kinematics(const SkeletonModel& model, const JointAngles& angles);

/// Angles drawn uniformly within each range, then forward kinematics.
Pose sample_pose(const SkeletonModel& model, RngStream& rng);

/// A named regime of joint angle ranges (an "action").
struct ActionPreset {
  std::string name;
  std::vector<AngleRange> ranges;
};

/// walking, eating, greeting, discussion for the default skeleton.
std::vector<ActionPreset> default_actions();
const ActionPreset& find_action(const std::vector<ActionPreset>& actions,
                                const std::string& name);

/// A subject is a global limb-length scale of the base skeleton.
struct Subject {
  std::string id;
  double scale = 1.0;
};

/// S1 S5 S6 S7 S8 (train) and S9 S11 (test) with scales between 0.92 and 1.08.
std::vector<Subject> default_subjects();
const Subject& find_subject(const std::vector<Subject>& subjects,
                            const std::string& id);

}  // namespace latentpose

#include "latentpose/skeleton.hpp"

#include <cmath>
#include <string>

#include "latentpose/errors.hpp"

namespace latentpose {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

Vec3 apply(const Mat3& m, const Vec3& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

// Rz(c) * Ry(b) * Rx(a)
Mat3 euler(const std::array<double, 3>& angles) {
  const double ca = std::cos(angles[0]), sa = std::sin(angles[0]);
  const double cb = std::cos(angles[1]), sb = std::sin(angles[1]);
  const double cc = std::cos(angles[2]), sc = std::sin(angles[2]);
  const Mat3 rx{{{1, 0, 0}, {0, ca, -sa}, {0, sa, ca}}};
  const Mat3 ry{{{cb, 0, sb}, {0, 1, 0}, {-sb, 0, cb}}};
  const Mat3 rz{{{cc, -sc, 0}, {sc, cc, 0}, {0, 0, 1}}};
  return multiply(rz, multiply(ry, rx));
}

AngleRange range(std::array<double, 3> lo, std::array<double, 3> hi) {
  return {lo, hi};
}

}  // namespace

void SkeletonModel::validate() const {
  const std::size_t n = parents.size();
  if (n < 2) throw ParameterError("skeleton needs at least two joints");
  if (joint_names.size() != n || bone_lengths.size() != n ||
      rest_directions.size() != n || angle_ranges.size() != n) {
    throw DimensionError("skeleton: per-joint tables have inconsistent lengths");
  }
  if (parents[0] != -1) throw ParameterError("skeleton: joint 0 must be the root");
  for (std::size_t j = 1; j < n; ++j) {
    if (parents[j] < 0 || static_cast<std::size_t>(parents[j]) >= j) {
      throw ParameterError("skeleton: joint " + joint_names[j] +
                           " must have a parent with a smaller index");
    }
    if (!(bone_lengths[j] > 0.0))
      throw ParameterError("skeleton: bone to " + joint_names[j] + " must be > 0");
    const auto& d = rest_directions[j];
    const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    if (std::abs(norm - 1.0) > 1e-12)
      throw ParameterError("skeleton: rest direction of " + joint_names[j] + " not unit");
  }
  for (std::size_t j = 0; j < n; ++j)
    for (int a = 0; a < 3; ++a)
      if (!(angle_ranges[j].min[a] <= angle_ranges[j].max[a]))
        throw ParameterError("skeleton: empty angle range at " + joint_names[j]);
  if (limbs.size() != n - 1) throw ParameterError("skeleton: one limb per non-root joint");
  for (std::size_t l = 0; l < limbs.size(); ++l) {
    if (limbs[l].child != l + 1 ||
        static_cast<int>(limbs[l].parent) != parents[limbs[l].child]) {
      throw ParameterError("skeleton: limb " + limbs[l].name + " does not match the tree");
    }
  }
  for (const auto* part : {&partitions.lower, &partitions.upper})
    for (auto l : *part)
      if (l >= limbs.size()) throw ParameterError("skeleton: partition limb out of range");
}

SkeletonModel SkeletonModel::scaled(double factor) const {
  if (!(factor > 0.0)) throw ParameterError("skeleton scale must be > 0");
  SkeletonModel m = *this;
  for (auto& l : m.bone_lengths) l *= factor;
  return m;
}

SkeletonModel SkeletonModel::with_ranges(std::vector<AngleRange> ranges) const {
  if (ranges.size() != parents.size())
    throw DimensionError("angle ranges: one range per joint required");
  SkeletonModel m = *this;
  m.angle_ranges = std::move(ranges);
  m.validate();
  return m;
}

SkeletonModel SkeletonModel::default_human() {
  SkeletonModel m;
  m.name = "default-17";
  struct J {
    const char* name;
    int parent;
    double length;
    Vec3 dir;
  };
  // x: subject's left, y: forward, z: up.
  const J joints[] = {
      {"pelvis", -1, 0.0, {0, 0, 1}},
      {"r_hip", 0, 130.0, {-1, 0, 0}},
      {"r_knee", 1, 450.0, {0, 0, -1}},
      {"r_ankle", 2, 440.0, {0, 0, -1}},
      {"l_hip", 0, 130.0, {1, 0, 0}},
      {"l_knee", 4, 450.0, {0, 0, -1}},
      {"l_ankle", 5, 440.0, {0, 0, -1}},
      {"spine", 0, 230.0, {0, 0, 1}},
      {"thorax", 7, 250.0, {0, 0, 1}},
      {"neck", 8, 110.0, {0, 0, 1}},
      {"head", 9, 120.0, {0, 0, 1}},
      {"l_shoulder", 8, 150.0, {1, 0, 0}},
      {"l_elbow", 11, 280.0, {0, 0, -1}},
      {"l_wrist", 12, 250.0, {0, 0, -1}},
      {"r_shoulder", 8, 150.0, {-1, 0, 0}},
      {"r_elbow", 14, 280.0, {0, 0, -1}},
      {"r_wrist", 15, 250.0, {0, 0, -1}},
  };
  for (const auto& j : joints) {
    m.joint_names.emplace_back(j.name);
    m.parents.push_back(j.parent);
    m.bone_lengths.push_back(j.length);
    m.rest_directions.push_back(j.dir);
  }
  for (std::size_t j = 1; j < m.parents.size(); ++j) {
    const auto p = static_cast<std::size_t>(m.parents[j]);
    m.limbs.push_back({p, j, m.joint_names[p] + "-" + m.joint_names[j]});
  }
  // Limb l ends at joint l + 1: limbs 0-5 are the legs and hips.
  m.partitions.lower = {0, 1, 2, 3, 4, 5};
  m.partitions.upper = {6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  m.angle_ranges = default_actions().front().ranges;
  m.validate();
  return m;
}

Pose forward_kinematics(const SkeletonModel& model, const JointAngles& angles) {
  const std::size_t n = model.joint_count();
  if (angles.size() != n) throw DimensionError("forward kinematics: one angle triple per joint");
  std::vector<Mat3> frames(n);
  std::vector<Vec3> positions(n, Vec3{0, 0, 0});
  frames[0] = euler(angles[0]);
  for (std::size_t j = 1; j < n; ++j) {
    const auto p = static_cast<std::size_t>(model.parents[j]);
    frames[j] = multiply(frames[p], euler(angles[j]));
    const auto& d = model.rest_directions[j];
    const double len = model.bone_lengths[j];
    const Vec3 bone = apply(frames[j], {len * d[0], len * d[1], len * d[2]});
    for (int a = 0; a < 3; ++a) positions[j][a] = positions[p][a] + bone[a];
  }
  Vector coords;
  coords.reserve(3 * n);
  for (const auto& pos : positions) coords.insert(coords.end(), pos.begin(), pos.end());
  return Pose(std::move(coords));
}

Pose sample_pose(const SkeletonModel& model, RngStream& rng) {
  JointAngles angles(model.joint_count());
  for (std::size_t j = 0; j < angles.size(); ++j) {
    const auto& r = model.angle_ranges[j];
    for (int a = 0; a < 3; ++a)
      angles[j][a] = r.min[a] == r.max[a] ? r.min[a] : rng.uniform(r.min[a], r.max[a]);
  }
  return forward_kinematics(model, angles);
}

std::vector<ActionPreset> default_actions() {
  // Joint order as in default_human(). Rotations about x swing a hanging bone
  // forward (+y) for positive angles; about y, negative angles lift a left
  // limb outward (+x) and positive angles lift a right limb outward (-x).
  const AngleRange fixed = AngleRange::fixed();
  auto make = [&](AngleRange root, AngleRange r_thigh, AngleRange r_shin,
                  AngleRange l_thigh, AngleRange l_shin, AngleRange spine,
                  AngleRange l_upper, AngleRange l_fore, AngleRange r_upper,
                  AngleRange r_fore) {
    const AngleRange small_spine = range({-0.1, -0.05, -0.1}, {0.1, 0.05, 0.1});
    const AngleRange head = range({-0.3, -0.2, -0.4}, {0.3, 0.2, 0.4});
    return std::vector<AngleRange>{
        root,    fixed,       r_thigh, r_shin, fixed,   l_thigh, l_shin,  spine,
        small_spine, head,    head,    fixed,  l_upper, l_fore,  fixed,   r_upper,
        r_fore};
  };
  const AngleRange yaw = range({-0.1, -0.1, -0.8}, {0.1, 0.1, 0.8});
  const AngleRange knee_bend = range({-0.9, 0.0, 0.0}, {0.0, 0.0, 0.0});
  const AngleRange elbow_bend = range({0.0, 0.0, 0.0}, {1.6, 0.0, 0.0});

  std::vector<ActionPreset> actions;
  actions.push_back(
      {"walking",
       make(yaw, range({-0.5, -0.05, 0.0}, {0.5, 0.1, 0.0}), range({-0.8, 0.0, 0.0}, {0.0, 0.0, 0.0}),
            range({-0.5, -0.1, 0.0}, {0.5, 0.05, 0.0}), range({-0.8, 0.0, 0.0}, {0.0, 0.0, 0.0}),
            range({-0.05, -0.05, -0.15}, {0.15, 0.05, 0.15}),
            range({-0.5, -0.2, 0.0}, {0.5, 0.0, 0.0}), range({0.0, 0.0, 0.0}, {0.6, 0.0, 0.0}),
            range({-0.5, 0.0, 0.0}, {0.5, 0.2, 0.0}), range({0.0, 0.0, 0.0}, {0.6, 0.0, 0.0}))});
  actions.push_back(
      {"eating",
       make(yaw, range({-0.1, -0.05, 0.0}, {0.3, 0.1, 0.0}), range({-0.3, 0.0, 0.0}, {0.0, 0.0, 0.0}),
            range({-0.1, -0.1, 0.0}, {0.3, 0.05, 0.0}), range({-0.3, 0.0, 0.0}, {0.0, 0.0, 0.0}),
            range({0.0, -0.05, -0.1}, {0.3, 0.05, 0.1}),
            range({0.1, -0.4, 0.0}, {0.9, 0.0, 0.0}), range({1.0, 0.0, 0.0}, {2.2, 0.0, 0.0}),
            range({0.1, 0.0, 0.0}, {0.9, 0.4, 0.0}), range({1.0, 0.0, 0.0}, {2.2, 0.0, 0.0}))});
  actions.push_back(
      {"greeting",
       make(yaw, range({-0.2, -0.05, 0.0}, {0.2, 0.15, 0.0}), knee_bend,
            range({-0.2, -0.15, 0.0}, {0.2, 0.05, 0.0}), knee_bend,
            range({-0.1, -0.1, -0.2}, {0.1, 0.1, 0.2}),
            range({-0.3, -0.3, 0.0}, {0.3, 0.0, 0.0}), range({0.0, 0.0, 0.0}, {0.8, 0.0, 0.0}),
            range({-0.6, 1.2, 0.0}, {0.6, 2.4, 0.0}), range({0.0, 0.0, 0.0}, {1.2, 0.0, 0.0}))});
  actions.push_back(
      {"discussion",
       make(yaw, range({-0.2, -0.05, 0.0}, {0.2, 0.2, 0.0}), knee_bend,
            range({-0.2, -0.2, 0.0}, {0.2, 0.05, 0.0}), knee_bend,
            range({-0.1, -0.1, -0.3}, {0.2, 0.1, 0.3}),
            range({-0.4, -1.2, 0.0}, {0.8, -0.2, 0.0}), elbow_bend,
            range({-0.4, 0.2, 0.0}, {0.8, 1.2, 0.0}), elbow_bend)});
  return actions;
}

const ActionPreset& find_action(const std::vector<ActionPreset>& actions,
                                const std::string& name) {
  for (const auto& a : actions)
    if (a.name == name) return a;
  throw ParameterError("unknown action '" + name + "'");
}

std::vector<Subject> default_subjects() {
  return {{"S1", 0.92}, {"S5", 0.96}, {"S6", 1.00}, {"S7", 1.04},
          {"S8", 1.08}, {"S9", 0.94}, {"S11", 1.06}};
}

const Subject& find_subject(const std::vector<Subject>& subjects,
                            const std::string& id) {
  for (const auto& s : subjects)
    if (s.id == id) return s;
  throw ParameterError("unknown subject '" + id + "'");
}

}  // namespace latentpose

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>

#include "latentpose/binary_io.hpp"
#include "latentpose/dataset.hpp"
#include "latentpose/errors.hpp"
#include "latentpose/eval.hpp"
#include "latentpose/render.hpp"
#include "latentpose/skeleton.hpp"

using namespace latentpose;
namespace fs = std::filesystem;

namespace {

SkeletonModel two_joint(double length) {
  SkeletonModel m;
  m.name = "chain-2";
  m.joint_names = {"base", "tip"};
  m.parents = {-1, 0};
  m.bone_lengths = {0.0, length};
  m.rest_directions = {{{0, 0, 1}}, {{0, 0, 1}}};
  m.angle_ranges = {AngleRange::fixed(), AngleRange::fixed()};
  m.limbs = {{0, 1, "bone"}};
  m.partitions = {{0}, {}};
  return m;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("latentpose_synth_" + name);
  fs::remove_all(p);
  return p;
}

DatasetSpec small_spec() {
  DatasetSpec s;
  s.n_train = 20;
  s.n_test = 8;
  s.seed = 17;
  return s;
}

}  // namespace

TEST(SkeletonModel, DefaultIsValidHuman) {
  const SkeletonModel m = SkeletonModel::default_human();
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(m.joint_count(), 17u);
  EXPECT_EQ(m.limbs.size(), 16u);
  EXPECT_EQ(m.pose_dim(), 51u);
  SkeletonModel broken = m;
  broken.parents[3] = 5;
  EXPECT_THROW(broken.validate(), ParameterError);
  broken = m;
  broken.bone_lengths[2] = 0.0;
  EXPECT_THROW(broken.validate(), ParameterError);
}

TEST(ForwardKinematics, TwoJointChain) {
  const Pose p = forward_kinematics(two_joint(100.0), JointAngles(2, {0, 0, 0}));
  EXPECT_EQ(p.joint(0), (std::array<double, 3>{0, 0, 0}));
  EXPECT_EQ(p.joint(1), (std::array<double, 3>{0, 0, 100}));
  // Collapsed ranges make sampling deterministic.
  RngStream rng(1);
  EXPECT_EQ(sample_pose(two_joint(100.0), rng), p);
}

TEST(ForwardKinematics, RotationAboutX) {
  JointAngles a(2, {0, 0, 0});
  a[0] = {M_PI / 2, 0, 0};
  const Pose p = forward_kinematics(two_joint(100.0), a);
  EXPECT_NEAR(p.joint(1)[0], 0.0, 1e-12);
  EXPECT_NEAR(p.joint(1)[1], -100.0, 1e-12);
  EXPECT_NEAR(p.joint(1)[2], 0.0, 1e-12);
}

TEST(SamplePose, LimbLengthsExactAndSeeded) {
  const SkeletonModel base = SkeletonModel::default_human();
  for (const auto& action : default_actions()) {
    for (const auto& subject : default_subjects()) {
      const SkeletonModel m = base.scaled(subject.scale).with_ranges(action.ranges);
      RngStream a(5), b(5);
      for (int i = 0; i < 50; ++i) {
        const Pose p = sample_pose(m, a);
        EXPECT_EQ(p, sample_pose(m, b));
        const Vector len = limb_lengths(p, m);
        for (std::size_t l = 0; l < len.size(); ++l)
          EXPECT_NEAR(len[l], m.bone_lengths[m.limbs[l].child], 1e-9);
      }
    }
  }
}

TEST(Render, NonEmptyAndDeterministic) {
  const SkeletonModel m = SkeletonModel::default_human();
  RngStream rng(2);
  const CameraConfig cam;
  for (int i = 0; i < 20; ++i) {
    const Pose p = sample_pose(m, rng);
    const Tensor img = render(p, m, cam);
    EXPECT_EQ(img.shape(), (std::vector<std::size_t>{1, 32, 32}));
    double mx = 0.0;
    for (double v : img.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      mx = std::max(mx, v);
    }
    EXPECT_GT(mx, 0.0);
    EXPECT_EQ(render(p, m, cam), img);
  }
}

TEST(Render, VerticalLimbIsAColumnBand) {
  const SkeletonModel m = two_joint(600.0);
  const Pose p = forward_kinematics(m, JointAngles(2, {0, 0, 0}));
  CameraConfig cam;
  cam.thickness = 2.0;
  const Tensor img = render(p, m, cam);
  std::size_t lo = 99, hi = 0;
  for (std::size_t r = 0; r < 32; ++r)
    for (std::size_t c = 0; c < 32; ++c)
      if (img(0, r, c) > 0.0) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
  ASSERT_LE(lo, hi);
  EXPECT_EQ(hi - lo + 1, 2u);
}

TEST(Render, OutOfFrameNamesJoint) {
  const SkeletonModel m = two_joint(5000.0);
  const Pose p = forward_kinematics(m, JointAngles(2, {0, 0, 0}));
  try {
    render(p, m, CameraConfig{});
    FAIL();
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("joint base"), std::string::npos);
  }
}

TEST(Camera, Validation) {
  CameraConfig c;
  c.image_size = 8;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.mm_per_pixel = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
  EXPECT_EQ(CameraConfig::parse_axes("xy"), (std::array<std::size_t, 2>{0, 1}));
  EXPECT_THROW(CameraConfig::parse_axes("xx"), ParameterError);
}

TEST(Dataset, SplitsAreDisjoint) {
  const Dataset ds = generate_dataset(SkeletonModel::default_human(), small_spec());
  for (const auto& tr : ds.train)
    for (const auto& te : ds.test) EXPECT_NE(tr.subject, te.subject);
  DatasetSpec bad = small_spec();
  bad.test_subjects = {"S9", "S1"};
  EXPECT_THROW(generate_dataset(SkeletonModel::default_human(), bad), ParameterError);
  bad = small_spec();
  bad.n_test = 0;
  EXPECT_THROW(generate_dataset(SkeletonModel::default_human(), bad), ParameterError);
}

TEST(Dataset, RecordsCarryExactLimbLengths) {
  const Dataset ds = generate_dataset(SkeletonModel::default_human(), small_spec());
  const auto subjects = default_subjects();
  const SkeletonModel base = SkeletonModel::default_human();
  for (const auto* split : {&ds.train, &ds.test})
    for (const auto& r : *split) {
      const SkeletonModel m = base.scaled(find_subject(subjects, r.subject).scale);
      const Vector len = limb_lengths(r.pose, m);
      for (std::size_t l = 0; l < len.size(); ++l)
        EXPECT_NEAR(len[l], m.bone_lengths[l + 1], 1e-9);
      EXPECT_EQ(r.pose.joint(0), (std::array<double, 3>{0, 0, 0}));
    }
}

TEST(Dataset, RegenerationIsByteIdentical) {
  const fs::path a = scratch("regen_a"), b = scratch("regen_b");
  const auto h1 = save_dataset(generate_dataset(SkeletonModel::default_human(), small_spec()), a);
  const auto h2 = save_dataset(generate_dataset(SkeletonModel::default_human(), small_spec()), b);
  EXPECT_EQ(h1, h2);
  for (const char* f : {"manifest.txt", "train_poses.bin", "train_images.bin", "test_poses.bin",
                        "test_images.bin"})
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  DatasetSpec other = small_spec();
  other.seed = 18;
  EXPECT_NE(dataset_content_hash(generate_dataset(SkeletonModel::default_human(), other)), h1);
}

TEST(Dataset, RoundTripBothFormats) {
  for (ImageFormat fmt : {ImageFormat::f64, ImageFormat::u8}) {
    DatasetSpec spec = small_spec();
    spec.image_format = fmt;
    const Dataset ds = generate_dataset(SkeletonModel::default_human(), spec);
    const fs::path dir = scratch("roundtrip_" + to_string(fmt));
    save_dataset(ds, dir);
    const Dataset back = load_dataset(dir);
    ASSERT_EQ(back.train.size(), ds.train.size());
    ASSERT_EQ(back.test.size(), ds.test.size());
    for (std::size_t i = 0; i < ds.train.size(); ++i) {
      EXPECT_EQ(back.train[i].pose, ds.train[i].pose);
      EXPECT_EQ(back.train[i].image, ds.train[i].image);
      EXPECT_EQ(back.train[i].subject, ds.train[i].subject);
      EXPECT_EQ(back.train[i].action, ds.train[i].action);
      EXPECT_EQ(back.train[i].id, ds.train[i].id);
    }
    EXPECT_EQ(back.spec.camera, ds.spec.camera);
  }
}

TEST(Dataset, CorruptFilesRejected) {
  const fs::path dir = scratch("corrupt");
  save_dataset(generate_dataset(SkeletonModel::default_human(), small_spec()), dir);
  const std::string poses = read_file(dir / "train_poses.bin");

  std::string bad = poses;
  bad[0] = 'X';
  write_file(dir / "train_poses.bin", bad);
  EXPECT_THROW(load_dataset(dir), FormatError);

  bad = poses;
  bad[8] = 9;  // version
  write_file(dir / "train_poses.bin", bad);
  try {
    load_dataset(dir);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }

  write_file(dir / "train_poses.bin", poses.substr(0, poses.size() - 5));
  EXPECT_THROW(load_dataset(dir), FormatError);

  bad = poses;
  bad[bad.size() - 1] ^= 1;
  write_file(dir / "train_poses.bin", bad);
  try {
    load_dataset(dir);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("hash"), std::string::npos);
  }
}

TEST(Dataset, DefaultSetGeneratesQuickly) {
  const auto start = std::chrono::steady_clock::now();
  const Dataset ds = generate_dataset(SkeletonModel::default_human(), DatasetSpec{});
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(ds.train.size(), 200u);
  EXPECT_EQ(ds.test.size(), 50u);
  EXPECT_LT(seconds, 60.0);
}

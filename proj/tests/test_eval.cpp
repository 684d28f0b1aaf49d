#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "latentpose/binary_io.hpp"
#include "latentpose/errors.hpp"
#include "latentpose/gradcheck.hpp"
#include "latentpose/eval.hpp"
#include "latentpose/report.hpp"
#include "latentpose/skeleton.hpp"
#include "oracles.hpp"

using namespace latentpose;

namespace {

// root -> a -> b along +z
SkeletonModel chain3() {
  SkeletonModel m;
  m.name = "chain-3";
  m.joint_names = {"root", "a", "b"};
  m.parents = {-1, 0, 1};
  m.bone_lengths = {0.0, 1.0, 1.0};
  m.rest_directions = {{{0, 0, 1}}, {{0, 0, 1}}, {{0, 0, 1}}};
  m.angle_ranges = {AngleRange::fixed(), AngleRange::fixed(), AngleRange::fixed()};
  m.limbs = {{0, 1, "first"}, {1, 2, "second"}};
  m.partitions = {{0}, {1}};
  return m;
}

Pose chain_pose(double l0, double l1) { return Pose(Vector{0, 0, 0, 0, 0, l0, 0, 0, l0 + l1}); }

Pose rotate(const Pose& p, const std::array<std::array<double, 3>, 3>& r) {
  Vector out(p.dim());
  for (std::size_t j = 0; j < p.joint_count(); ++j) {
    const auto x = p.joint(j);
    for (std::size_t i = 0; i < 3; ++i)
      out[3 * j + i] = r[i][0] * x[0] + r[i][1] * x[1] + r[i][2] * x[2];
  }
  return Pose(out);
}

Pose random_pose(RngStream& rng) {
  Vector v = oracle::random_vector(51, rng, -500, 500);
  return Pose::with_root_zeroed(v);
}

}  // namespace

TEST(Mpjpe, ExactCases) {
  RngStream rng(1);
  const Pose a = random_pose(rng);
  EXPECT_EQ(mpjpe(a, a), 0.0);
  Vector v = a.values();
  v[3 * 5 + 0] += 3.0;
  v[3 * 5 + 2] += 4.0;
  EXPECT_NEAR(mpjpe(Pose(v), a), 5.0 / 17.0, 1e-12);
  Vector shifted = a.values();
  for (std::size_t j = 0; j < 17; ++j) shifted[3 * j + 2] += 10.0;
  EXPECT_NEAR(mpjpe(std::span<const double>(shifted), a.coords()), 10.0, 1e-12);
  const Pose base(Vector(51, 0.0));
  EXPECT_THROW(mpjpe(Pose(Vector(6, 0.0)), base), DimensionError);
  EXPECT_THROW(mpjpe(std::span<const double>(shifted).first(50), a.coords()), DimensionError);
}

TEST(Mpjpe, MetricAxiomsAndRotationInvariance) {
  RngStream rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    EXPECT_GE(mpjpe(a, b), 0.0);
    EXPECT_EQ(mpjpe(a, b), mpjpe(b, a));
    EXPECT_LE(mpjpe(a, c), mpjpe(a, b) + mpjpe(b, c) + 1e-9);
    EXPECT_GT(mpjpe(a, b), 0.0);
    const double t = rng.uniform(0, 2 * M_PI);
    const std::array<std::array<double, 3>, 3> rz{
        {{std::cos(t), -std::sin(t), 0}, {std::sin(t), std::cos(t), 0}, {0, 0, 1}}};
    EXPECT_NEAR(mpjpe(rotate(a, rz), rotate(b, rz)), mpjpe(a, b), 1e-9);
  }
}

TEST(LimbLengths, CanonicalScaledDegenerate) {
  const SkeletonModel m = SkeletonModel::default_human();
  const Pose canon = forward_kinematics(m, JointAngles(17, {0, 0, 0}));
  const Vector len = limb_lengths(canon, m);
  for (std::size_t l = 0; l < 16; ++l) EXPECT_NEAR(len[l], m.bone_lengths[l + 1], 1e-12);
  const Vector twice = limb_lengths(canon.scaled(2.0), m);
  for (std::size_t l = 0; l < 16; ++l) EXPECT_NEAR(twice[l], 2 * len[l], 1e-12);
  EXPECT_EQ(limb_lengths(Pose(Vector(51, 0.0)), m), Vector(16, 0.0));
  EXPECT_THROW(limb_lengths(chain_pose(1, 1), m), DimensionError);
}

TEST(LogRatio, ValuesAndErrors) {
  const SkeletonModel m = chain3();
  const LimbRatioMatrix eq = log_ratio_matrix(chain_pose(3, 3), m);
  for (double v : eq.values.data()) EXPECT_EQ(v, 0.0);
  const LimbRatioMatrix r = log_ratio_matrix(chain_pose(2, 1), m);
  EXPECT_NEAR(r.values(0, 1), std::log(2.0), 1e-15);
  EXPECT_EQ(r.limbs, (std::vector<std::string>{"first", "second"}));
  try {
    log_ratio_matrix(chain_pose(1, 0), m);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("second"), std::string::npos);
  }
}

TEST(LogRatio, AntisymmetricOnRandomPoses) {
  const SkeletonModel m = SkeletonModel::default_human();
  RngStream rng(3);
  for (int i = 0; i < 1000; ++i) {
    const LimbRatioMatrix r = log_ratio_matrix(random_pose(rng), m);
    for (std::size_t a = 0; a < 16; ++a) {
      EXPECT_EQ(r.values(a, a), 0.0);
      for (std::size_t b = 0; b < 16; ++b) EXPECT_NEAR(r.values(a, b), -r.values(b, a), 1e-12);
    }
  }
}

TEST(RatioErrors, IdentityScaleAndHandCase) {
  const SkeletonModel m = SkeletonModel::default_human();
  RngStream rng(4);
  std::vector<Pose> truth, doubled;
  for (int i = 0; i < 30; ++i) {
    truth.push_back(random_pose(rng));
    doubled.push_back(truth.back().scaled(2.0));
  }
  const RatioErrors same = ratio_error_matrix(truth, truth, m);
  for (double v : same.matrix.data()) EXPECT_EQ(v, 0.0);
  const RatioErrors scaled = ratio_error_matrix(doubled, truth, m);
  for (double v : scaled.matrix.data()) EXPECT_NEAR(v, 0.0, 1e-12);
  std::vector<Pose> other, other_scaled;
  for (int i = 0; i < 30; ++i) {
    other.push_back(random_pose(rng));
    other_scaled.push_back(other.back().scaled(0.7));
  }
  const RatioErrors e0 = ratio_error_matrix(other, truth, m);
  const RatioErrors e1 = ratio_error_matrix(other_scaled, truth, m);
  EXPECT_GT(squared_norm(e0.matrix.data()), 1.0);
  EXPECT_LE(relative_error(e0.matrix.data(), e1.matrix.data()), 1e-12);

  const SkeletonModel c = chain3();
  const std::vector<Pose> preds{chain_pose(2, 1), chain_pose(1, 1)};
  const std::vector<Pose> truths{chain_pose(1, 1), chain_pose(1, 2)};
  const RatioErrors e = ratio_error_matrix(preds, truths, c);
  // |ln2 - 0| and |0 - ln(1/2)|, averaged
  EXPECT_NEAR(e.matrix(0, 1), std::log(2.0), 1e-15);
  EXPECT_NEAR(e.matrix(1, 0), std::log(2.0), 1e-15);
  EXPECT_EQ(e.matrix(0, 0), 0.0);
  EXPECT_TRUE(e.flagged_samples.empty());
  EXPECT_THROW(ratio_error_matrix(std::span(preds).first(1), truths, c), DimensionError);
}

TEST(RatioErrors, ZeroLengthPredictionsAreClampedAndFlagged) {
  const SkeletonModel c = chain3();
  const std::vector<Pose> preds{chain_pose(1, 1), chain_pose(1, 0)};
  const std::vector<Pose> truths{chain_pose(1, 1), chain_pose(1, 1)};
  const RatioErrors e = ratio_error_matrix(preds, truths, c);
  EXPECT_EQ(e.flagged_samples, (std::vector<std::size_t>{1}));
  EXPECT_NEAR(e.matrix(0, 1), 0.5 * std::log(1.0 / kMinLimbLength), 1e-9);
}

TEST(PartitionSums, Properties) {
  const BodyPartitions parts = SkeletonModel::default_human().partitions;
  const PartitionSums z = partition_sums(Tensor({16, 16}), parts);
  EXPECT_EQ(z.lower, 0.0);
  EXPECT_EQ(z.upper, 0.0);
  EXPECT_EQ(z.full, 0.0);
  Tensor one({16, 16});
  one(2, 5) = 0.7;
  one(5, 2) = 0.7;
  const std::size_t pair[] = {2, 5};
  EXPECT_NEAR(partition_sum(one, pair), 0.7, 1e-15);
  const std::size_t bad[] = {2, 16};
  EXPECT_THROW(partition_sum(one, bad), DimensionError);
  RngStream rng(5);
  for (int i = 0; i < 100; ++i) {
    const Tensor m = oracle::random_tensor({16, 16}, rng, 0.0, 1.0);
    const PartitionSums s = partition_sums(m, parts);
    EXPECT_GE(s.full, s.lower);
    EXPECT_GE(s.full, s.upper);
  }
}

TEST(EvaluateMethod, PerActionAndOverall) {
  const SkeletonModel m = SkeletonModel::default_human();
  RngStream rng(6);
  std::vector<Pose> truth, pred;
  std::vector<std::string> actions;
  for (int i = 0; i < 8; ++i) {
    truth.push_back(random_pose(rng));
    Vector v = truth.back().values();
    for (std::size_t j = 1; j < 17; ++j) v[3 * j] += i % 2 ? 17.0 : 0.0;
    pred.push_back(Pose(v));
    actions.push_back(i % 2 ? "walking" : "eating");
  }
  const EvalReport r = evaluate_method("M", pred, truth, actions, m);
  EXPECT_NEAR(r.action_mpjpe.at("walking"), 16.0, 1e-12);
  EXPECT_NEAR(r.action_mpjpe.at("eating"), 0.0, 1e-12);
  EXPECT_NEAR(r.overall_mpjpe, 8.0, 1e-12);
  EXPECT_GE(r.sums.full, std::max(r.sums.lower, r.sums.upper));
}

TEST(Report, PublishedValuesFormatExactly) {
  const std::vector<ReportRow> rows{
      {"OURS", "Walking", 65.75, {}, {}, {}},
      {"OURS", "Discussion", 129.06, {}, {}, {}},
      {"KDE", "all", {}, {}, {}, 16.43},
  };
  EXPECT_EQ(render_report_csv(rows),
            "method,action,mpjpe_mm,lower_sum,upper_sum,full_sum\n"
            "OURS,Walking,65.75,,,\n"
            "OURS,Discussion,129.06,,,\n"
            "KDE,all,,,,16.43\n");
  EXPECT_EQ(render_report_csv({}), "method,action,mpjpe_mm,lower_sum,upper_sum,full_sum\n");
  EXPECT_EQ(format_value(16.43), "16.43");
  EXPECT_THROW(render_report_csv(std::vector<ReportRow>{{"a,b", "x", {}, {}, {}, {}}}),
               ParameterError);
}

TEST(Report, WideTableAndRows) {
  EvalReport r;
  r.method = "OURS";
  r.action_mpjpe = {{"Walking", 65.75}, {"Discussion", 129.06}};
  r.overall_mpjpe = 97.405;
  r.sums = {1.5, 2.25, 16.43};
  const std::vector<std::string> actions{"Walking", "Eating", "Discussion"};
  const std::vector<EvalReport> reports{r};
  EXPECT_EQ(render_mpjpe_table(reports, actions),
            "method,Walking,Eating,Discussion,all\nOURS,65.75,,129.06,97.41\n");
  EXPECT_EQ(render_report_csv(report_rows(r, actions)),
            "method,action,mpjpe_mm,lower_sum,upper_sum,full_sum\n"
            "OURS,Walking,65.75,,,\n"
            "OURS,Eating,,,,\n"
            "OURS,Discussion,129.06,,,\n"
            "OURS,all,97.41,1.50,2.25,16.43\n");
}

TEST(Report, HeatmapFiles) {
  const auto base = std::filesystem::temp_directory_path() / "latentpose_heatmap_test";
  const Tensor m = Tensor::matrix(2, 2, {0.0, 0.5, 0.5, 1.0});
  const std::vector<std::string> labels{"first", "second"};
  write_heatmap(m, labels, base, 4);
  auto with = [&](const char* ext) {
    auto p = base;
    p += ext;
    return p;
  };
  const std::string pgm = read_file(with(".pgm"));
  const std::string header = "P5\n8 8\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 64);
  EXPECT_EQ(pgm.substr(0, header.size()), header);
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size()]), 0);
  EXPECT_EQ(static_cast<unsigned char>(pgm.back()), 255);
  EXPECT_EQ(read_file(with(".txt")), "min = 0.000000\nmax = 1.000000\n");
  EXPECT_EQ(read_file(with(".csv")),
            "limb,first,second\nfirst,0.000000,0.500000\nsecond,0.500000,1.000000\n");
}

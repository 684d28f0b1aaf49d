#include <gtest/gtest.h>

#include <cmath>

#include "latentpose/autoencoder.hpp"
#include "latentpose/config.hpp"
#include "latentpose/dataset.hpp"
#include "latentpose/errors.hpp"
#include "latentpose/gradcheck.hpp"
#include "latentpose/pca.hpp"
#include "latentpose/pipeline.hpp"
#include "latentpose/regressor.hpp"
#include "oracles.hpp"

using namespace latentpose;

namespace {

CnnShape tiny_shape(std::size_t image, std::array<std::size_t, 3> kernels, std::size_t out) {
  CnnShape s;
  s.image_size = image;
  s.kernel_sizes = kernels;
  s.channels = {2, 3, 2};
  s.fc_widths = {5, 4};
  s.output_dim = out;
  return s;
}

template <typename P>
Tensor flatten(const P& p) {
  Vector all;
  for (const Tensor* t : p.parameters()) all.insert(all.end(), t->data().begin(), t->data().end());
  return Tensor::from_vector(all);
}

template <typename P>
P unflatten(P p, const Tensor& flat) {
  std::size_t k = 0;
  for (Tensor* t : p.parameters())
    for (auto& v : t->data()) v = flat[k++];
  return p;
}

StackedNetworkParams random_stacked(const CnnShape& shape, std::size_t pose_dim,
                                    RngStream& rng) {
  StackedNetworkParams p;
  p.encoder = ImageEncoderParams::initialize(shape, rng);
  for (Tensor* t : p.encoder.parameters())
    for (auto& v : t->data()) v = rng.uniform(-0.6, 0.6);
  p.decoder.push_back({oracle::random_tensor({6, shape.output_dim}, rng, -0.6, 0.6),
                       oracle::random_tensor({6}, rng, -0.6, 0.6)});
  p.decoder.push_back({oracle::random_tensor({pose_dim, 6}, rng, -0.6, 0.6),
                       oracle::random_tensor({pose_dim}, rng, -0.6, 0.6)});
  return p;
}

// Small, fast default-shaped data: the generator's default 200/50 split.
const Dataset& default_data() {
  static const Dataset ds =
      generate_dataset(SkeletonModel::default_human(), dataset_spec(ExperimentConfig{}));
  return ds;
}

RegTrainConfig quick(std::size_t epochs) {
  RegTrainConfig c;
  c.epochs = epochs;
  c.batch_size = 16;
  c.seed = 3;
  return c;
}

double mean_inference_loss(const StackedNetworkParams& p, const RegressionSet& set) {
  double s = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i)
    s += pose_sample_loss(p, set.images[i], set.poses[i], {}, nullptr);
  return s / static_cast<double>(set.size());
}

}  // namespace

TEST(CnnForward, ZeroParamsGiveZeroOutput) {
  RngStream rng(1);
  ImageEncoderParams p = ImageEncoderParams::initialize(CnnShape{.output_dim = 7}, rng);
  for (Tensor* t : p.parameters()) t->fill(0.0);
  const Tensor img = oracle::random_tensor({1, 32, 32}, rng, 0, 1);
  for (double v : cnn_forward(p, img)) EXPECT_EQ(v, 0.0);
}

TEST(CnnForward, ImageShapeChecked) {
  RngStream rng(1);
  const ImageEncoderParams p = ImageEncoderParams::initialize(CnnShape{.output_dim = 7}, rng);
  EXPECT_THROW(cnn_forward(p, Tensor({1, 20, 20})), DimensionError);
  EXPECT_THROW(cnn_forward(p, Tensor({2, 32, 32})), DimensionError);
}

TEST(CnnForward, NoDropoutMeansTrainingEqualsInference) {
  RngStream rng(2);
  const ImageEncoderParams p = ImageEncoderParams::initialize(CnnShape{.output_dim = 7}, rng);
  const Tensor img = oracle::random_tensor({1, 32, 32}, rng, 0, 1);
  RngStream d(3);
  EXPECT_EQ(cnn_forward(p, img, {true, 0.0, &d}), cnn_forward(p, img));
  EXPECT_EQ(d.counter(), 0u);
}

TEST(CnnGradient, EncoderMatchesFiniteDifferencesOn8x8) {
  RngStream rng(31);
  const CnnShape shape = tiny_shape(8, {1, 1, 1}, 3);
  for (int trial = 0; trial < 5; ++trial) {
    StackedNetworkParams net = random_stacked(shape, 3, rng);
    const ImageEncoderParams& p = net.encoder;
    const Tensor img = oracle::random_tensor({1, 8, 8}, rng);
    const Vector target = oracle::random_vector(3, rng);
    ImageEncoderParams grad = p.zeros_like();
    latent_sample_loss(p, img, target, {}, &grad);
    const Tensor fd = finite_diff_grad(
        [&](const Tensor& f) { return latent_sample_loss(unflatten(p, f), img, target, {}, nullptr); },
        flatten(p), 1e-6);
    EXPECT_LE(relative_error(flatten(grad).data(), fd.data()), 1e-4);
  }
}

TEST(CnnGradient, StackedNetworkWithDropoutMatchesFiniteDifferences) {
  RngStream rng(32);
  const CnnShape shape = tiny_shape(16, {3, 2, 2}, 4);
  for (int trial = 0; trial < 5; ++trial) {
    const StackedNetworkParams p = random_stacked(shape, 6, rng);
    const Tensor img = oracle::random_tensor({1, 16, 16}, rng);
    const Vector target = oracle::random_vector(6, rng);
    const RngStream mask = rng.substream(trial);
    RngStream m0 = mask;
    StackedNetworkParams grad = p.zeros_like();
    pose_sample_loss(p, img, target, {true, 0.3, &m0}, &grad);
    const Tensor fd = finite_diff_grad(
        [&](const Tensor& f) {
          RngStream m = mask;
          return pose_sample_loss(unflatten(p, f), img, target, {true, 0.3, &m}, nullptr);
        },
        flatten(p), 1e-6);
    EXPECT_LE(relative_error(flatten(grad).data(), fd.data()), 1e-4);
  }
}

TEST(StackDecoder, CompositionIdentityAndCopies) {
  RngStream rng(4);
  AutoEncoderParams ae = AutoEncoderParams::initialize(51, std::vector<std::size_t>{80, 90}, rng);
  for (Tensor* t : ae.parameters())
    for (auto& v : t->data()) v = rng.uniform(-0.3, 0.3);
  const ImageEncoderParams cnn = ImageEncoderParams::initialize(CnnShape{.output_dim = 90}, rng);
  const Tensor img = oracle::random_tensor({1, 32, 32}, rng, 0, 1);
  StackedNetworkParams st = stack_decoder(cnn, ae);
  const Vector expected = decode(ae, cnn_forward(cnn, img));
  EXPECT_EQ(stacked_forward(st, img), expected);
  EXPECT_EQ(predict_pose(st, img), Pose::with_root_zeroed(expected));
  EXPECT_EQ(predict_pose(st, img), predict_pose(st, img));
  const AutoEncoderParams before = ae;
  st.decoder[0].weights.fill(0.0);
  EXPECT_EQ(ae, before);
  const ImageEncoderParams wrong = ImageEncoderParams::initialize(CnnShape{.output_dim = 80}, rng);
  EXPECT_THROW(stack_decoder(wrong, ae), DimensionError);
}

TEST(LatentRegression, FrozenTargetsDeterminismAndMismatch) {
  const Dataset& ds = default_data();
  const RegressionSet set = regression_set(ds.train, 1000.0);
  RngStream rng(5);
  const AutoEncoderParams ae =
      AutoEncoderParams::initialize(51, std::vector<std::size_t>{100}, rng);
  const AutoEncoderParams ae_copy = ae;
  RngStream init(6);
  const ImageEncoderParams cnn =
      ImageEncoderParams::initialize(CnnShape{.output_dim = 100}, init);
  const auto a = train_latent_regression(cnn, ae, set, quick(1));
  const auto b = train_latent_regression(cnn, ae, set, quick(1));
  EXPECT_EQ(a, b);
  EXPECT_EQ(ae, ae_copy);
  const ImageEncoderParams wrong = ImageEncoderParams::initialize(CnnShape{.output_dim = 60}, init);
  EXPECT_THROW(train_latent_regression(wrong, ae, set, quick(1)), DimensionError);
}

TEST(LatentRegression, LossHalvesWithinDefaultBudget) {
  const ExperimentConfig cfg;
  const Dataset& ds = default_data();
  const AutoEncoderParams ae = train_ae_stage(cfg, ds);
  const RegressionSet set = regression_set(ds.train, cfg.pose_scale_mm);
  RngStream init = RngStream(cfg.seed).substream(0);
  const ImageEncoderParams cnn0 =
      ImageEncoderParams::initialize(cnn_shape(cfg, ae.latent_dim()), init);
  auto latent_loss = [&](const ImageEncoderParams& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i)
      s += latent_sample_loss(p, set.images[i], encode(ae, set.poses[i]), {}, nullptr);
    return s / static_cast<double>(set.size());
  };
  const ImageEncoderParams cnn = train_latent_stage(cfg, ds, ae);
  EXPECT_LE(latent_loss(cnn), 0.5 * latent_loss(cnn0));
}

TEST(FinetuneStacked, ZeroEpochsAndMonotone) {
  const Dataset& ds = default_data();
  const RegressionSet set = regression_set(ds.train, 1000.0);
  RngStream rng(7);
  AutoEncoderParams ae = AutoEncoderParams::initialize(51, std::vector<std::size_t>{100}, rng);
  const ImageEncoderParams cnn = ImageEncoderParams::initialize(CnnShape{.output_dim = 100}, rng);
  const StackedNetworkParams st = stack_decoder(cnn, ae);
  EXPECT_EQ(finetune_stacked(st, set, quick(0)), st);
  const StackedNetworkParams ft = finetune_stacked(st, set, quick(2));
  EXPECT_LE(mean_joint_error(ft, set), mean_joint_error(st, set));
  EXPECT_EQ(finetune_stacked(st, set, quick(2)), ft);
}

TEST(FinetuneStacked, DecoderGradientMatchesFiniteDifferences) {
  RngStream rng(33);
  const CnnShape shape = tiny_shape(16, {3, 2, 2}, 4);
  for (int trial = 0; trial < 5; ++trial) {
    const StackedNetworkParams p = random_stacked(shape, 6, rng);
    const Tensor img = oracle::random_tensor({1, 16, 16}, rng);
    const Vector target = oracle::random_vector(6, rng);
    StackedNetworkParams grad = p.zeros_like();
    pose_sample_loss(p, img, target, {}, &grad);
    for (std::size_t l = 0; l < p.decoder.size(); ++l) {
      const Tensor fd = finite_diff_grad(
          [&](const Tensor& w) {
            StackedNetworkParams q = p;
            q.decoder[l].weights = w;
            return pose_sample_loss(q, img, target, {}, nullptr);
          },
          p.decoder[l].weights, 1e-6);
      EXPECT_LE(relative_error(grad.decoder[l].weights.data(), fd.data()), 1e-4);
    }
  }
}

TEST(DirectBaseline, OutputDimLossDropAndDeterminism) {
  const ExperimentConfig cfg;
  const Dataset& ds = default_data();
  const RegressionSet set = regression_set(ds.train, cfg.pose_scale_mm);
  const StackedNetworkParams net = train_baseline_stage(cfg, ds, Stage::direct);
  EXPECT_EQ(net.output_dim(), 51u);
  EXPECT_TRUE(net.decoder.empty());
  EXPECT_LE(mean_inference_loss(net, set), 0.5 * mean_inference_loss(untrained_network(cfg), set));
  const CnnShape shape = cnn_shape(cfg, 51);
  EXPECT_EQ(train_direct_baseline(set, shape, quick(1)), train_direct_baseline(set, shape, quick(1)));
}

TEST(ExtraFcBaseline, ShapeLossDropAndDeterminism) {
  const Dataset& ds = default_data();
  const RegressionSet set = regression_set(ds.train, 1000.0);
  const CnnShape shape = cnn_shape(ExperimentConfig{}, 51);
  const auto a = train_extrafc_baseline(set, shape, quick(30), 2000);
  EXPECT_EQ(a.output_dim(), 51u);
  EXPECT_EQ(a.encoder.fc.back().weights.dim(0), 2000u);
  CnnShape wide = shape;
  wide.fc_widths.push_back(2000);
  RngStream init = RngStream(3).substream(0);
  const StackedNetworkParams start{ImageEncoderParams::initialize(wide, init), {}};
  EXPECT_LE(mean_inference_loss(a, set), 0.5 * mean_inference_loss(start, set));
  EXPECT_EQ(train_extrafc_baseline(set, shape, quick(0), 2000), start);
  EXPECT_EQ(train_extrafc_baseline(set, shape, quick(1), 2000),
            train_extrafc_baseline(set, shape, quick(1), 2000));
}

TEST(Pca, LineAndFullRank) {
  std::vector<Vector> line;
  for (int i = 0; i < 6; ++i) line.push_back({1.0 + i, 2.0 - 2.0 * i, 0.5 * i});
  const PcaBasis b = fit_pca(line, 1);
  for (const auto& y : line) {
    const Vector r = b.reconstruct(b.project(y));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(r[k], y[k], 1e-12);
  }
  RngStream rng(8);
  std::vector<Vector> xs;
  for (int i = 0; i < 60; ++i) xs.push_back(oracle::random_vector(51, rng));
  const PcaBasis full = fit_pca(xs, 51);
  for (const auto& y : xs) {
    const Vector r = full.reconstruct(full.project(y));
    for (std::size_t k = 0; k < 51; ++k) EXPECT_NEAR(r[k], y[k], 1e-10);
  }
  EXPECT_THROW(fit_pca(xs, 0), ParameterError);
  EXPECT_THROW(fit_pca(xs, 52), ParameterError);
  EXPECT_THROW(fit_pca(std::span(xs).first(3), 3), ParameterError);
}

TEST(Pca, MatchesJacobiOracle) {
  RngStream rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vector> xs;
    for (int i = 0; i < 10; ++i) {
      Vector x = oracle::random_vector(6, rng);
      x[1] += 2.0 * x[0];
      x[4] *= 0.3;
      xs.push_back(x);
    }
    const PcaBasis b = fit_pca(xs, 6);
    const auto [values, vectors] = oracle::jacobi_eigen(oracle::covariance(xs));
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_NEAR(b.explained_variance[i], values[i], 1e-8);
      if (i > 0) EXPECT_LE(b.explained_variance[i], b.explained_variance[i - 1]);
      const double sign = (b.components(i, 0) * vectors[i][0] >= 0 ? 1.0 : -1.0);
      double align = 0.0;
      for (std::size_t k = 0; k < 6; ++k) {
        EXPECT_NEAR(b.components(i, k), sign * vectors[i][k], 1e-8);
        align += b.components(i, k) * b.components(i, k);
      }
      EXPECT_NEAR(align, 1.0, 1e-12);
    }
  }
}

TEST(PcaBaseline, SupportedRanksAndDeterminism) {
  const Dataset& ds = default_data();
  const RegressionSet set = regression_set(ds.train, 1000.0);
  for (std::size_t k : {30, 40, 51}) {
    const PcaBaseline b = train_pca_baseline(set, cnn_shape(ExperimentConfig{}, k), quick(1), k);
    EXPECT_EQ(b.network.encoder.shape.output_dim, k);
    ASSERT_EQ(b.network.decoder.size(), 1u);
    EXPECT_EQ(b.network.decoder[0].weights, b.basis.components.transposed());
    EXPECT_EQ(b.network.output_dim(), 51u);
  }
  const auto shape = cnn_shape(ExperimentConfig{}, 40);
  EXPECT_EQ(train_pca_baseline(set, shape, quick(1), 40).network,
            train_pca_baseline(set, shape, quick(1), 40).network);
}

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "latentpose/autoencoder.hpp"
#include "latentpose/pca.hpp"
#include "latentpose/pose.hpp"
#include "latentpose/rng.hpp"
#include "latentpose/tensor.hpp"

namespace latentpose {

/// Architecture of the image encoder: three conv + ReLU + 2x2 max-pool
/// blocks, a cascade of ReLU dense layers, then a linear output map.
struct CnnShape {
  std::size_t image_size = 32;
  std::size_t in_channels = 1;
  std::array<std::size_t, 3> kernel_sizes{5, 3, 3};
  std::array<std::size_t, 3> channels{8, 16, 32};
  std::vector<std::size_t> fc_widths{128, 128, 64};
  std::size_t output_dim = 0;

  /// Length of the flattened feature vector after the third pooling layer.
  std::size_t flat_features() const;
  void validate() const;
  bool operator==(const CnnShape&) const = default;
};

struct DenseLayer {
  Tensor weights;  // [out x in]
  Tensor bias;     // [out]
  bool operator==(const DenseLayer&) const = default;
};

struct ConvLayer {
  Tensor kernels;  // [K x C x kh x kw]
  Tensor bias;     // [K]
  bool operator==(const ConvLayer&) const = default;
};

struct ImageEncoderParams {
  CnnShape shape;
  std::array<ConvLayer, 3> conv;
  std::vector<DenseLayer> fc;
  DenseLayer out;

  /// Glorot-uniform weights, zero biases.
  static ImageEncoderParams initialize(const CnnShape& shape, RngStream& rng);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  ImageEncoderParams zeros_like() const;
  bool operator==(const ImageEncoderParams&) const = default;
};

/// Image encoder followed by explicit (untied) decoder layers: ReLU between
/// decoder layers, the last one linear. An empty decoder means the encoder
/// output is the pose itself.
struct StackedNetworkParams {
  ImageEncoderParams encoder;
  std::vector<DenseLayer> decoder;

  std::size_t output_dim() const;
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  StackedNetworkParams zeros_like() const;
  bool operator==(const StackedNetworkParams&) const = default;
};

struct ForwardMode {
  bool training = false;
  double dropout_p = 0.0;
  RngStream* rng = nullptr;  // required when training with dropout_p > 0
};

/// Crops a [C x H x W] image to size x size with top-left at (top, left).
Tensor crop_image(const Tensor& image, std::size_t size, std::size_t top,
                  std::size_t left);
/// Center crop to `size`, or the image itself when it already matches.
Tensor fit_image(const Tensor& image, std::size_t size);

/// Latent prediction of the image encoder. Images larger than the network
/// input are center-cropped. Dropout follows every hidden dense layer when
/// `mode.training` is set.
Vector cnn_forward(const ImageEncoderParams& params, const Tensor& image,
                   ForwardMode mode = {});
Vector stacked_forward(const StackedNetworkParams& params, const Tensor& image,
                       ForwardMode mode = {});

/// ||cnn_forward(image) - target||^2 for one sample; gradients are added to
/// `grad` when it is non-null.
double latent_sample_loss(const ImageEncoderParams& params, const Tensor& image,
                          std::span<const double> target, ForwardMode mode,
                          ImageEncoderParams* grad);
/// ||stacked_forward(image) - target||^2 for one sample.
double pose_sample_loss(const StackedNetworkParams& params, const Tensor& image,
                        std::span<const double> target, ForwardMode mode,
                        StackedNetworkParams* grad);

/// Images paired with pose vectors (in network units).
struct RegressionSet {
  std::vector<Tensor> images;
  std::vector<Vector> poses;

  std::size_t size() const { return images.size(); }
  void validate() const;
};

struct RegTrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t epochs = 60;
  double dropout_p = 0.5;
  std::uint64_t seed = 1;
  /// Random crops of the network input size from larger images.
  bool augment = false;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per-sample squared error over the epoch
  double eval_mpjpe = 0.0;  // NaN when no evaluation hook is supplied
};

using EncoderEval = std::function<double(const ImageEncoderParams&)>;
using NetworkEval = std::function<double(const StackedNetworkParams&)>;

/// Regresses images onto frozen auto-encoder codes encode(ae, pose).
ImageEncoderParams train_latent_regression(ImageEncoderParams cnn,
                                           const AutoEncoderParams& ae,
                                           const RegressionSet& data,
                                           const RegTrainConfig& config,
                                           std::vector<EpochRecord>* log = nullptr,
                                           const EncoderEval& eval = {});

/// Appends the auto-encoder decoder as independent dense layers.
StackedNetworkParams stack_decoder(const ImageEncoderParams& cnn,
                                   const AutoEncoderParams& ae);

/// End-to-end squared pose loss over every layer. Returns the parameters
/// with the lowest training-set MPJPE (inference mode) seen at entry or after
/// any epoch.
StackedNetworkParams finetune_stacked(StackedNetworkParams params,
                                      const RegressionSet& data,
                                      const RegTrainConfig& config,
                                      std::vector<EpochRecord>* log = nullptr,
                                      const NetworkEval& eval = {});

/// CNN-Direct: the same body with a linear pose output layer.
StackedNetworkParams train_direct_baseline(const RegressionSet& data,
                                           CnnShape shape,
                                           const RegTrainConfig& config,
                                           std::vector<EpochRecord>* log = nullptr,
                                           const NetworkEval& eval = {});

/// CNN-ExtraFC: CNN-Direct with one more ReLU dense layer of width
/// `extra_dim` before the pose output.
StackedNetworkParams train_extrafc_baseline(const RegressionSet& data,
                                            CnnShape shape,
                                            const RegTrainConfig& config,
                                            std::size_t extra_dim,
                                            std::vector<EpochRecord>* log = nullptr,
                                            const NetworkEval& eval = {});

/// CNN-PCA: the encoder regresses k PCA coefficients of the pose; the frozen
/// basis becomes a single linear decoder layer (weights B^T, bias = mean).
struct PcaBaseline {
  PcaBasis basis;
  StackedNetworkParams network;
};

PcaBaseline train_pca_baseline(const RegressionSet& data, CnnShape shape,
                               const RegTrainConfig& config, std::size_t k,
                               std::vector<EpochRecord>* log = nullptr,
                               const NetworkEval& eval = {});

/// Inference-mode forward pass with the root joint re-zeroed.
Pose predict_pose(const StackedNetworkParams& params, const Tensor& image);

/// Mean over samples of the per-joint Euclidean error (network units), in
/// inference mode.
double mean_joint_error(const StackedNetworkParams& params,
                        const RegressionSet& data);

}  // namespace latentpose

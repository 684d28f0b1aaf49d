#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "latentpose/pose.hpp"
#include "latentpose/rng.hpp"
#include "latentpose/tensor.hpp"

namespace latentpose {

/// One encoding layer with its mirrored decoding layer. The decoder weight is
/// always the transpose of `weights`; it is never stored separately.
struct TiedLayer {
  Tensor weights;      // [out x in]
  Tensor encode_bias;  // [out]
  Tensor decode_bias;  // [in]

  std::size_t input_dim() const { return weights.dim(1); }
  std::size_t output_dim() const { return weights.dim(0); }
  bool operator==(const TiedLayer&) const = default;
};

enum class Completeness {
  /// The middle layer must be wider than the input.
  overcomplete,
  /// Any consistent chain; used for single-layer sub-problems and toy cases.
  unconstrained,
};

/// Stack of tied encode/decode layers. Encoding applies ReLU after every
/// layer; decoding mirrors it with ReLU on intermediate layers and a linear
/// final layer back to input space.
class AutoEncoderParams {
 public:
  AutoEncoderParams() = default;
  explicit AutoEncoderParams(std::vector<TiedLayer> layers,
                             Completeness completeness = Completeness::overcomplete);

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static AutoEncoderParams initialize(std::size_t input_dim,
                                      std::span<const std::size_t> hidden,
                                      RngStream& rng,
                                      Completeness completeness = Completeness::overcomplete);

  std::size_t depth() const { return layers_.size(); }
  std::size_t input_dim() const { return layers_.front().input_dim(); }
  std::size_t latent_dim() const { return layers_.back().output_dim(); }
  Completeness completeness() const { return completeness_; }

  const TiedLayer& layer(std::size_t j) const { return layers_.at(j); }
  TiedLayer& layer(std::size_t j) { return layers_.at(j); }
  const std::vector<TiedLayer>& layers() const { return layers_; }

  /// Per layer, in order: weights, encode bias, decode bias.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  /// Same shapes, all zeros, unconstrained; used as a gradient accumulator.
  AutoEncoderParams zeros_like() const;

  bool operator==(const AutoEncoderParams& other) const {
    return layers_ == other.layers_;
  }

 private:
  std::vector<TiedLayer> layers_;
  Completeness completeness_ = Completeness::unconstrained;
};

using AeGradients = AutoEncoderParams;

/// What an auto-encoder input vector represents. Pose inputs keep the root
/// joint pinned at the origin under corruption.
enum class InputKind { pose, code };

struct AeTrainConfig {
  std::vector<std::size_t> layer_sizes{2000};
  /// Corruption std-dev per layer, in the units of that layer's input.
  std::vector<double> noise_sigmas{40.0};
  double lambda = 0.1;
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t epochs = 50;
  std::uint64_t seed = 1;

  void validate() const;
};

Pose corrupt(const Pose& pose, double sigma, RngStream& rng);
Vector corrupt(std::span<const double> input, double sigma, RngStream& rng,
               InputKind kind);

Vector encode(const AutoEncoderParams& params, std::span<const double> input);
Vector decode(const AutoEncoderParams& params, std::span<const double> code);
Vector reconstruct(const AutoEncoderParams& params, std::span<const double> input);

struct PenaltyResult {
  double value = 0.0;
  AeGradients gradient;
};

/// Squared Frobenius norm of the Jacobian of the full encoding map at
/// `input`, with its gradient with respect to every parameter. The ReLU
/// masks are piecewise constant, so bias gradients are identically zero.
PenaltyResult contractive_penalty(const AutoEncoderParams& params,
                                  std::span<const double> input);

struct AeLossResult {
  double loss = 0.0;
  AeGradients gradient;
};

/// sum_i ||y_i - reconstruct(corrupt(y_i))||^2 + lambda * ||J(y_i)||_F^2 over
/// the batch. Corruption uses noise_sigmas.front(); the penalty is taken at
/// the clean input. Gradients are of the summed loss.
AeLossResult ae_loss(const AutoEncoderParams& params,
                     std::span<const Vector> clean_batch, RngStream& rng,
                     const AeTrainConfig& config,
                     InputKind kind = InputKind::pose);

/// Forward-only version of ae_loss.
double ae_objective(const AutoEncoderParams& params,
                    std::span<const Vector> clean_batch, RngStream& rng,
                    const AeTrainConfig& config,
                    InputKind kind = InputKind::pose);

struct AeTrainHooks {
  /// Called before greedy training of layer `layer` (0-based) with the
  /// clean inputs that layer is fitted to.
  std::function<void(std::size_t layer, std::span<const Vector> inputs)>
      on_layer_start;
  std::function<void(std::size_t epoch, double mean_loss)> on_epoch;
};

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer);

/// Trains one tied denoising contractive layer from a fresh initialization
/// seeded with `seed`.
AutoEncoderParams train_single_dae(std::span<const Vector> inputs,
                                   std::size_t hidden, double sigma,
                                   const AeTrainConfig& config,
                                   std::uint64_t seed, InputKind kind,
                                   const AeTrainHooks& hooks = {});

/// Greedy layer-wise training: layer j is a single-layer DAE fitted to the
/// clean codes of layer j-1 with noise_sigmas[j]. Returns the stack.
AutoEncoderParams pretrain_layerwise(std::span<const Vector> poses,
                                     const AeTrainConfig& config,
                                     const AeTrainHooks& hooks = {});

/// End-to-end training of the whole stack with ae_loss. The returned
/// parameters are the best seen on the training objective (evaluated with a
/// fixed noise draw), so the objective never ends above its entry value.
AutoEncoderParams finetune_ae(AutoEncoderParams params,
                              std::span<const Vector> poses,
                              const AeTrainConfig& config,
                              const AeTrainHooks& hooks = {});

}  // namespace latentpose

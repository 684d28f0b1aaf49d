#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latentpose/rng.hpp"
#include "latentpose/tensor.hpp"

namespace latentpose {

// Dense layer: output = weights * input + bias, weights shaped [out x in].

Vector dense_forward(const Tensor& weights, std::span<const double> bias,
                     std::span<const double> input);

struct DenseGrads {
  Tensor weights;
  Vector bias;
  Vector input;
};

DenseGrads dense_backward(const Tensor& weights, std::span<const double> input,
                          std::span<const double> upstream);

/// Adds this sample's gradients into the accumulators. `dinput` may be empty
/// when the input gradient is not needed.
void dense_backward_accumulate(const Tensor& weights,
                               std::span<const double> input,
                               std::span<const double> upstream,
                               Tensor& dweights, std::span<double> dbias,
                               std::span<double> dinput);

Vector relu(std::span<const double> input);
void relu_inplace(std::span<double> values);
/// Passes `upstream` where `input > 0`; the gradient at exactly 0 is 0.
Vector relu_backward(std::span<const double> input,
                     std::span<const double> upstream);

/// Valid cross-correlation, stride 1, no padding.
/// input [C x H x W], kernels [K x C x kh x kw], bias [K]
/// -> [K x (H-kh+1) x (W-kw+1)].
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels,
                      std::span<const double> bias);

struct Conv2dGrads {
  Tensor kernels;
  Vector bias;
  Tensor input;
};

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& upstream);

void conv2d_backward_accumulate(const Tensor& input, const Tensor& kernels,
                                const Tensor& upstream, Tensor& dkernels,
                                std::span<double> dbias, Tensor* dinput);

/// 2x2 non-overlapping max pooling on [C x H x W]. An odd trailing row or
/// column is dropped. Ties go to the first window entry in row-major order.
struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  // flat input index per output entry
  std::vector<std::size_t> input_shape;
};

PoolResult maxpool2x2(const Tensor& input);
Tensor maxpool2x2_backward(const PoolResult& forward, const Tensor& upstream);

/// Inverted dropout. In training mode each entry is zeroed with probability
/// p and survivors are scaled by 1/(1-p); otherwise the identity.
struct DropoutResult {
  Vector output;
  Vector scale;  // per-entry multiplier applied, reused by backward
};

DropoutResult dropout(std::span<const double> input, double p, RngStream& rng,
                      bool training);
Vector dropout_backward(std::span<const double> scale,
                        std::span<const double> upstream);

}  // namespace latentpose

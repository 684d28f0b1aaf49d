#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "latentpose/tensor.hpp"

namespace latentpose {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates for one parameter tensor.
struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const Tensor& params, const AdamHyper& hyper = {});
};

/// One bias-corrected ADAM update of `params` in place.
void adam_step(AdamState& state, Tensor& params, const Tensor& grads);

/// ADAM over an ordered list of parameter tensors; states are created lazily
/// on the first step and matched to tensors by position.
class Adam {
 public:
  explicit Adam(AdamHyper hyper = {}) : hyper_(hyper) {}

  void step(std::span<Tensor* const> params,
            std::span<const Tensor* const> grads);

  const std::vector<AdamState>& states() const { return states_; }

 private:
  AdamHyper hyper_;
  std::vector<AdamState> states_;
};

}  // namespace latentpose

#include "latentpose/adam.hpp"

#include <cmath>

#include "latentpose/errors.hpp"

namespace latentpose {

AdamState AdamState::for_params(const Tensor& params, const AdamHyper& hyper) {
  if (!(hyper.learning_rate > 0.0) || !(hyper.epsilon > 0.0) ||
      !(hyper.beta1 > 0.0 && hyper.beta1 < 1.0) ||
      !(hyper.beta2 > 0.0 && hyper.beta2 < 1.0)) {
    throw ParameterError("invalid ADAM hyperparameters");
  }
  return AdamState{params.zeros_like(), params.zeros_like(), 0,
                   hyper.learning_rate, hyper.beta1, hyper.beta2,
                   hyper.epsilon};
}

void adam_step(AdamState& state, Tensor& params, const Tensor& grads) {
  require_shape(grads, params.shape(), "adam gradient");
  require_shape(state.first_moment, params.shape(), "adam first moment");
  require_shape(state.second_moment, params.shape(), "adam second moment");
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  auto m = state.first_moment.data();
  auto v = state.second_moment.data();
  auto p = params.data();
  auto g = grads.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

void Adam::step(std::span<Tensor* const> params,
                std::span<const Tensor* const> grads) {
  if (params.size() != grads.size())
    throw DimensionError("adam: parameter and gradient counts differ");
  if (states_.empty()) {
    states_.reserve(params.size());
    for (const Tensor* p : params) states_.push_back(AdamState::for_params(*p, hyper_));
  }
  if (states_.size() != params.size())
    throw DimensionError("adam: parameter count changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i)
    adam_step(states_[i], *params[i], *grads[i]);
}

}  // namespace latentpose

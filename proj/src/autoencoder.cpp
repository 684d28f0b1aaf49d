#include "latentpose/autoencoder.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "latentpose/adam.hpp"
#include "latentpose/errors.hpp"
#include "latentpose/layers.hpp"
#include "training_loop.hpp"

namespace latentpose {

AutoEncoderParams::AutoEncoderParams(std::vector<TiedLayer> layers,
                                     Completeness completeness)
    : layers_(std::move(layers)), completeness_(completeness) {
  if (layers_.empty()) throw DimensionError("auto-encoder needs at least one layer");
  for (std::size_t j = 0; j < layers_.size(); ++j) {
    const auto& l = layers_[j];
    const std::string name = "auto-encoder layer " + std::to_string(j + 1);
    if (l.weights.rank() != 2) throw DimensionError(name + ": weights must be a matrix");
    require_shape(l.encode_bias, {l.output_dim()}, (name + " encode bias").c_str());
    require_shape(l.decode_bias, {l.input_dim()}, (name + " decode bias").c_str());
    if (j > 0 && l.input_dim() != layers_[j - 1].output_dim()) {
      throw DimensionError(name + ": input dimension " +
                           std::to_string(l.input_dim()) +
                           " does not match previous output " +
                           std::to_string(layers_[j - 1].output_dim()));
    }
  }
  if (completeness_ == Completeness::overcomplete && latent_dim() <= input_dim()) {
    throw DimensionError("auto-encoder must be overcomplete: middle dimension " +
                         std::to_string(latent_dim()) + " <= input dimension " +
                         std::to_string(input_dim()));
  }
}

AutoEncoderParams AutoEncoderParams::initialize(std::size_t input_dim,
                                                std::span<const std::size_t> hidden,
                                                RngStream& rng,
                                                Completeness completeness) {
  std::vector<TiedLayer> layers;
  std::size_t in = input_dim;
  for (std::size_t out : hidden) {
    if (in == 0 || out == 0) throw DimensionError("layer sizes must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Tensor w({out, in});
    for (auto& v : w.data()) v = rng.uniform(-limit, limit);
    layers.push_back({std::move(w), Tensor({out}), Tensor({in})});
    in = out;
  }
  return AutoEncoderParams(std::move(layers), completeness);
}

std::vector<Tensor*> AutoEncoderParams::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weights);
    out.push_back(&l.encode_bias);
    out.push_back(&l.decode_bias);
  }
  return out;
}

std::vector<const Tensor*> AutoEncoderParams::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weights);
    out.push_back(&l.encode_bias);
    out.push_back(&l.decode_bias);
  }
  return out;
}

AutoEncoderParams AutoEncoderParams::zeros_like() const {
  std::vector<TiedLayer> z;
  for (const auto& l : layers_)
    z.push_back({l.weights.zeros_like(), l.encode_bias.zeros_like(),
                 l.decode_bias.zeros_like()});
  return AutoEncoderParams(std::move(z), Completeness::unconstrained);
}

void AeTrainConfig::validate() const {
  if (layer_sizes.empty()) throw ParameterError("ae: at least one layer size required");
  if (noise_sigmas.size() != layer_sizes.size()) {
    throw ParameterError("ae: " + std::to_string(noise_sigmas.size()) +
                         " noise sigmas given for " +
                         std::to_string(layer_sizes.size()) + " layers");
  }
  for (double s : noise_sigmas)
    if (!(s >= 0.0)) throw ParameterError("ae: noise sigmas must be >= 0");
  if (!(lambda >= 0.0)) throw ParameterError("ae: lambda must be >= 0");
  if (!(learning_rate > 0.0)) throw ParameterError("ae: learning rate must be > 0");
  if (batch_size == 0) throw ParameterError("ae: batch size must be > 0");
}

Vector corrupt(std::span<const double> input, double sigma, RngStream& rng,
               InputKind kind) {
  if (!(sigma >= 0.0))
    throw ParameterError("corrupt: sigma must be >= 0, got " + std::to_string(sigma));
  Vector out(input.begin(), input.end());
  if (sigma == 0.0) return out;
  for (auto& v : out) v += sigma * rng.normal();
  if (kind == InputKind::pose && out.size() >= 3) out[0] = out[1] = out[2] = 0.0;
  return out;
}

Pose corrupt(const Pose& pose, double sigma, RngStream& rng) {
  return Pose(corrupt(pose.coords(), sigma, rng, InputKind::pose));
}

namespace {

void check_input(const AutoEncoderParams& p, std::size_t n) {
  if (n != p.input_dim()) {
    throw DimensionError("auto-encoder input: expected length " +
                         std::to_string(p.input_dim()) + ", got " +
                         std::to_string(n));
  }
}

/// acts[0] is the input, acts[j + 1] = relu(pres[j]).
struct EncodeTrace {
  std::vector<Vector> pres;
  std::vector<Vector> acts;
};

EncodeTrace trace_encode(const AutoEncoderParams& p, std::span<const double> input) {
  check_input(p, input.size());
  EncodeTrace t;
  t.acts.emplace_back(input.begin(), input.end());
  for (const auto& l : p.layers()) {
    t.pres.push_back(dense_forward(l.weights, l.encode_bias.data(), t.acts.back()));
    t.acts.push_back(relu(t.pres.back()));
  }
  return t;
}

/// u = W^T z + b_dec
Vector decode_layer(const TiedLayer& l, std::span<const double> z) {
  if (z.size() != l.output_dim())
    throw DimensionError("auto-encoder code: length mismatch");
  const std::size_t rows = l.output_dim(), cols = l.input_dim();
  Vector u(cols, 0.0);
  const double* w = l.weights.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double zi = z[i];
    if (zi == 0.0) continue;
    const double* row = w + i * cols;
    for (std::size_t k = 0; k < cols; ++k) u[k] += row[k] * zi;
  }
  // bias last, as in dense_forward
  for (std::size_t k = 0; k < cols; ++k) u[k] += l.decode_bias[k];
  return u;
}

/// decode inputs z[j + 1] and pre-activations u[j] for every layer j, walking
/// from the top; z[0] is the reconstruction.
struct DecodeTrace {
  std::vector<Vector> pres;  // u_j
  std::vector<Vector> zs;    // z_j, z_L = code
};

DecodeTrace trace_decode(const AutoEncoderParams& p, std::span<const double> code) {
  const std::size_t depth = p.depth();
  DecodeTrace t;
  t.pres.resize(depth);
  t.zs.resize(depth + 1);
  t.zs[depth].assign(code.begin(), code.end());
  for (std::size_t j = depth; j-- > 0;) {
    t.pres[j] = decode_layer(p.layer(j), t.zs[j + 1]);
    t.zs[j] = j > 0 ? relu(t.pres[j]) : t.pres[j];
  }
  return t;
}

/// Adds grad_scale * d||J||_F^2 / dparams into `grad` (if non-null) and
/// returns ||J||_F^2. J_j = D_j W_j J_{j-1} with J_0 = I.
double penalty_accumulate(const AutoEncoderParams& p, const EncodeTrace& trace,
                          double grad_scale, AeGradients* grad) {
  const std::size_t depth = p.depth();
  const std::size_t n = p.input_dim();
  if (depth == 1) {
    // J = diag(mask) W: sum of squared active rows.
    const auto& w = p.layer(0).weights;
    double value = 0.0;
    for (std::size_t i = 0; i < w.dim(0); ++i) {
      if (!(trace.pres[0][i] > 0.0)) continue;
      const double* row = &w(i, 0);
      for (std::size_t k = 0; k < n; ++k) value += row[k] * row[k];
      if (grad) {
        double* drow = &grad->layer(0).weights(i, 0);
        for (std::size_t k = 0; k < n; ++k) drow[k] += 2.0 * grad_scale * row[k];
      }
    }
    return value;
  }
  std::vector<Tensor> jac(depth);  // jac[j] : [out_j x n]
  for (std::size_t j = 0; j < depth; ++j) {
    const auto& w = p.layer(j).weights;
    const std::size_t rows = w.dim(0), cols = w.dim(1);
    Tensor m({rows, n});
    for (std::size_t i = 0; i < rows; ++i) {
      if (!(trace.pres[j][i] > 0.0)) continue;
      double* out = &m(i, 0);
      if (j == 0) {
        for (std::size_t k = 0; k < n; ++k) out[k] = w(i, k);
      } else {
        for (std::size_t k = 0; k < cols; ++k) {
          const double wik = w(i, k);
          if (wik == 0.0) continue;
          const double* below = &jac[j - 1](k, 0);
          for (std::size_t c = 0; c < n; ++c) out[c] += wik * below[c];
        }
      }
    }
    jac[j] = std::move(m);
  }
  const double value = squared_norm(jac.back().data());
  if (!grad) return value;

  // upstream = d(scale * ||J_L||^2) / dJ_L, then walk down the product.
  Tensor upstream = jac.back();
  for (auto& v : upstream.data()) v *= 2.0 * grad_scale;
  for (std::size_t j = depth; j-- > 0;) {
    const auto& w = p.layer(j).weights;
    const std::size_t rows = w.dim(0), cols = w.dim(1);
    auto& dw = grad->layer(j).weights;
    // Mask rows of the upstream by this layer's active units.
    for (std::size_t i = 0; i < rows; ++i)
      if (!(trace.pres[j][i] > 0.0))
        std::fill_n(&upstream(i, 0), n, 0.0);
    if (j == 0) {
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < n; ++k) dw(i, k) += upstream(i, k);
      break;
    }
    const Tensor& below = jac[j - 1];
    Tensor next({cols, n});
    for (std::size_t i = 0; i < rows; ++i) {
      if (!(trace.pres[j][i] > 0.0)) continue;
      const double* up = &upstream(i, 0);
      for (std::size_t k = 0; k < cols; ++k) {
        const double* b = &below(k, 0);
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += up[c] * b[c];
        dw(i, k) += acc;
        const double wik = w(i, k);
        double* nx = &next(k, 0);
        for (std::size_t c = 0; c < n; ++c) nx[c] += wik * up[c];
      }
    }
    upstream = std::move(next);
  }
  return value;
}

/// Squared reconstruction error of one sample; gradients added into `grad`.
double reconstruction_accumulate(const AutoEncoderParams& p,
                                 std::span<const double> noisy,
                                 std::span<const double> clean,
                                 AeGradients* grad) {
  const EncodeTrace enc = trace_encode(p, noisy);
  const DecodeTrace dec = trace_decode(p, enc.acts.back());
  Vector g(clean.size());
  double loss = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    const double r = dec.zs[0][k] - clean[k];
    loss += r * r;
    g[k] = 2.0 * r;
  }
  if (!grad) return loss;

  const std::size_t depth = p.depth();
  // Decoder, bottom to top: g holds dL/dz_j on entry to layer j.
  for (std::size_t j = 0; j < depth; ++j) {
    if (j > 0)
      for (std::size_t k = 0; k < g.size(); ++k)
        if (!(dec.pres[j][k] > 0.0)) g[k] = 0.0;
    const auto& w = p.layer(j).weights;
    auto& gl = grad->layer(j);
    const auto& z = dec.zs[j + 1];
    const std::size_t rows = w.dim(0), cols = w.dim(1);
    for (std::size_t k = 0; k < cols; ++k) gl.decode_bias[k] += g[k];
    Vector up(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* row = &w(i, 0);
      double* drow = &gl.weights(i, 0);
      const double zi = z[i];
      double acc = 0.0;
      for (std::size_t k = 0; k < cols; ++k) {
        drow[k] += zi * g[k];
        acc += row[k] * g[k];
      }
      up[i] = acc;
    }
    g = std::move(up);
  }
  // Encoder, top to bottom: g holds dL/dh_{j+1}.
  for (std::size_t j = depth; j-- > 0;) {
    auto& gl = grad->layer(j);
    const Vector da = relu_backward(enc.pres[j], g);
    Vector dx(p.layer(j).input_dim(), 0.0);
    dense_backward_accumulate(p.layer(j).weights, enc.acts[j], da, gl.weights,
                              gl.encode_bias.data(),
                              j > 0 ? std::span<double>(dx) : std::span<double>());
    g = std::move(dx);
  }
  return loss;
}

double batch_loss(const AutoEncoderParams& params,
                  std::span<const Vector> clean_batch, RngStream& rng,
                  const AeTrainConfig& config, InputKind kind, AeGradients* grad) {
  if (clean_batch.empty()) throw ParameterError("ae_loss: empty batch");
  if (config.noise_sigmas.empty()) throw ParameterError("ae_loss: no noise sigma");
  const double sigma = config.noise_sigmas.front();
  double total = 0.0;
  for (const auto& y : clean_batch) {
    check_input(params, y.size());
    const Vector noisy = corrupt(y, sigma, rng, kind);
    total += reconstruction_accumulate(params, noisy, y, grad);
    if (config.lambda > 0.0) {
      const EncodeTrace clean_trace = trace_encode(params, y);
      total += config.lambda * penalty_accumulate(params, clean_trace, config.lambda, grad);
    }
  }
  return total;
}

}  // namespace

Vector encode(const AutoEncoderParams& params, std::span<const double> input) {
  return trace_encode(params, input).acts.back();
}

Vector decode(const AutoEncoderParams& params, std::span<const double> code) {
  if (code.size() != params.latent_dim()) {
    throw DimensionError("auto-encoder code: expected length " +
                         std::to_string(params.latent_dim()) + ", got " +
                         std::to_string(code.size()));
  }
  return trace_decode(params, code).zs[0];
}

Vector reconstruct(const AutoEncoderParams& params, std::span<const double> input) {
  const Vector code = encode(params, input);
  return decode(params, code);
}

PenaltyResult contractive_penalty(const AutoEncoderParams& params,
                                  std::span<const double> input) {
  PenaltyResult r{0.0, params.zeros_like()};
  r.value = penalty_accumulate(params, trace_encode(params, input), 1.0, &r.gradient);
  return r;
}

AeLossResult ae_loss(const AutoEncoderParams& params,
                     std::span<const Vector> clean_batch, RngStream& rng,
                     const AeTrainConfig& config, InputKind kind) {
  AeLossResult r{0.0, params.zeros_like()};
  r.loss = batch_loss(params, clean_batch, rng, config, kind, &r.gradient);
  return r;
}

double ae_objective(const AutoEncoderParams& params,
                    std::span<const Vector> clean_batch, RngStream& rng,
                    const AeTrainConfig& config, InputKind kind) {
  return batch_loss(params, clean_batch, rng, config, kind, nullptr);
}

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer) {
  return splitmix64(seed ^ splitmix64(0xAE00 + layer));
}

namespace {

constexpr std::uint64_t kEvalNoiseTag = 0xE7A1;

/// Runs `epochs` of mini-batch ADAM on ae_loss. With `keep_best`, the
/// objective is measured with a fixed noise draw before training and after
/// every epoch and the best parameters are returned.
AutoEncoderParams run_ae_training(AutoEncoderParams params,
                                  std::span<const Vector> inputs,
                                  const AeTrainConfig& config, InputKind kind,
                                  RngStream rng, bool keep_best,
                                  const AeTrainHooks& hooks) {
  if (inputs.empty()) throw ParameterError("auto-encoder training: empty dataset");
  RngStream shuffle_rng = rng.substream(1);
  RngStream noise_rng = rng.substream(2);
  const RngStream eval_rng = rng.substream(kEvalNoiseTag);
  Adam optimizer(AdamHyper{.learning_rate = config.learning_rate});

  auto evaluate = [&](const AutoEncoderParams& p) {
    RngStream r = eval_rng;
    return ae_objective(p, inputs, r, config, kind);
  };
  AutoEncoderParams best = params;
  double best_objective = keep_best ? evaluate(params)
                                    : std::numeric_limits<double>::infinity();

  std::vector<Vector> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = detail::shuffled_indices(inputs.size(), shuffle_rng);
    double epoch_loss = 0.0;
    detail::for_each_batch(order, config.batch_size, [&](auto first, auto last) {
      batch.clear();
      for (auto it = first; it != last; ++it) batch.push_back(inputs[*it]);
      AeLossResult r = ae_loss(params, batch, noise_rng, config, kind);
      epoch_loss += r.loss;
      auto grads = r.gradient.parameters();
      detail::scale_all(grads, 1.0 / static_cast<double>(batch.size()));
      auto ps = params.parameters();
      optimizer.step(ps, detail::as_const(grads));
    });
    if (hooks.on_epoch) hooks.on_epoch(epoch, epoch_loss / static_cast<double>(inputs.size()));
    if (keep_best) {
      const double objective = evaluate(params);
      if (objective < best_objective) {
        best_objective = objective;
        best = params;
      }
    }
  }
  return keep_best ? best : params;
}

}  // namespace

AutoEncoderParams train_single_dae(std::span<const Vector> inputs,
                                   std::size_t hidden, double sigma,
                                   const AeTrainConfig& config,
                                   std::uint64_t seed, InputKind kind,
                                   const AeTrainHooks& hooks) {
  if (inputs.empty()) throw ParameterError("auto-encoder training: empty dataset");
  AeTrainConfig layer_config = config;
  layer_config.layer_sizes = {hidden};
  layer_config.noise_sigmas = {sigma};
  layer_config.validate();
  RngStream rng(seed);
  RngStream init_rng = rng.substream(0);
  const std::size_t sizes[] = {hidden};
  auto params = AutoEncoderParams::initialize(inputs.front().size(), sizes, init_rng,
                                              Completeness::unconstrained);
  return run_ae_training(std::move(params), inputs, layer_config, kind, rng,
                         false, hooks);
}

AutoEncoderParams pretrain_layerwise(std::span<const Vector> poses,
                                     const AeTrainConfig& config,
                                     const AeTrainHooks& hooks) {
  config.validate();
  if (poses.empty()) throw ParameterError("pretrain: empty pose set");
  const std::size_t input_dim = poses.front().size();
  for (const auto& p : poses)
    if (p.size() != input_dim) throw DimensionError("pretrain: inconsistent pose lengths");
  if (config.layer_sizes.back() <= input_dim) {
    throw DimensionError("auto-encoder must be overcomplete: middle dimension " +
                         std::to_string(config.layer_sizes.back()) +
                         " <= input dimension " + std::to_string(input_dim));
  }

  std::vector<TiedLayer> stack;
  std::vector<Vector> inputs(poses.begin(), poses.end());
  for (std::size_t j = 0; j < config.layer_sizes.size(); ++j) {
    if (hooks.on_layer_start) hooks.on_layer_start(j, inputs);
    const InputKind kind = j == 0 ? InputKind::pose : InputKind::code;
    AutoEncoderParams layer =
        train_single_dae(inputs, config.layer_sizes[j], config.noise_sigmas[j],
                         config, layer_seed(config.seed, j), kind, hooks);
    if (j + 1 < config.layer_sizes.size())
      for (auto& x : inputs) x = encode(layer, x);
    stack.push_back(layer.layer(0));
  }
  return AutoEncoderParams(std::move(stack), Completeness::overcomplete);
}

AutoEncoderParams finetune_ae(AutoEncoderParams params,
                              std::span<const Vector> poses,
                              const AeTrainConfig& config,
                              const AeTrainHooks& hooks) {
  if (poses.empty()) throw ParameterError("finetune_ae: empty pose set");
  if (config.noise_sigmas.empty()) throw ParameterError("finetune_ae: no noise sigma");
  for (const auto& p : poses) check_input(params, p.size());
  if (config.epochs == 0) return params;
  return run_ae_training(std::move(params), poses, config, InputKind::pose,
                         RngStream(splitmix64(config.seed ^ 0xF1E7u)), true, hooks);
}

}  // namespace latentpose

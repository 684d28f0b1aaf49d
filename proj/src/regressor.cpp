#include "latentpose/regressor.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "latentpose/adam.hpp"
#include "latentpose/errors.hpp"
#include "latentpose/eval.hpp"
#include "latentpose/layers.hpp"
#include "training_loop.hpp"

namespace latentpose {

std::size_t CnnShape::flat_features() const {
  std::size_t side = image_size;
  for (std::size_t b = 0; b < 3; ++b) {
    if (kernel_sizes[b] == 0 || kernel_sizes[b] > side) {
      throw DimensionError("cnn block " + std::to_string(b + 1) + ": kernel " +
                           std::to_string(kernel_sizes[b]) +
                           " does not fit input of side " + std::to_string(side));
    }
    side = (side - kernel_sizes[b] + 1) / 2;
    if (side == 0) {
      throw DimensionError("cnn block " + std::to_string(b + 1) +
                           ": nothing left after pooling");
    }
  }
  return channels[2] * side * side;
}

void CnnShape::validate() const {
  if (in_channels == 0) throw DimensionError("cnn: input channels must be positive");
  for (auto c : channels)
    if (c == 0) throw DimensionError("cnn: channel counts must be positive");
  for (auto w : fc_widths)
    if (w == 0) throw DimensionError("cnn: dense widths must be positive");
  if (output_dim == 0) throw DimensionError("cnn: output dimension must be positive");
  (void)flat_features();
}

namespace {

Tensor glorot(std::vector<std::size_t> shape, std::size_t fan_in,
              std::size_t fan_out, RngStream& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

DenseLayer dense_init(std::size_t in, std::size_t out, RngStream& rng) {
  return {glorot({out, in}, in, out, rng), Tensor({out})};
}

DenseLayer dense_zeros(const DenseLayer& l) {
  return {l.weights.zeros_like(), l.bias.zeros_like()};
}

}  // namespace

ImageEncoderParams ImageEncoderParams::initialize(const CnnShape& shape,
                                                  RngStream& rng) {
  shape.validate();
  ImageEncoderParams p;
  p.shape = shape;
  std::size_t in_c = shape.in_channels;
  for (std::size_t b = 0; b < 3; ++b) {
    const std::size_t k = shape.kernel_sizes[b], out_c = shape.channels[b];
    p.conv[b] = {glorot({out_c, in_c, k, k}, in_c * k * k, out_c * k * k, rng),
                 Tensor({out_c})};
    in_c = out_c;
  }
  std::size_t in = shape.flat_features();
  for (auto w : shape.fc_widths) {
    p.fc.push_back(dense_init(in, w, rng));
    in = w;
  }
  p.out = dense_init(in, shape.output_dim, rng);
  return p;
}

std::vector<Tensor*> ImageEncoderParams::parameters() {
  std::vector<Tensor*> out;
  for (auto& c : conv) {
    out.push_back(&c.kernels);
    out.push_back(&c.bias);
  }
  for (auto& l : fc) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  out.push_back(&this->out.weights);
  out.push_back(&this->out.bias);
  return out;
}

std::vector<const Tensor*> ImageEncoderParams::parameters() const {
  auto ps = const_cast<ImageEncoderParams*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

ImageEncoderParams ImageEncoderParams::zeros_like() const {
  ImageEncoderParams z;
  z.shape = shape;
  for (std::size_t b = 0; b < 3; ++b)
    z.conv[b] = {conv[b].kernels.zeros_like(), conv[b].bias.zeros_like()};
  for (const auto& l : fc) z.fc.push_back(dense_zeros(l));
  z.out = dense_zeros(out);
  return z;
}

std::size_t StackedNetworkParams::output_dim() const {
  return decoder.empty() ? encoder.out.weights.dim(0) : decoder.back().weights.dim(0);
}

std::vector<Tensor*> StackedNetworkParams::parameters() {
  auto out = encoder.parameters();
  for (auto& l : decoder) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> StackedNetworkParams::parameters() const {
  auto ps = const_cast<StackedNetworkParams*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

StackedNetworkParams StackedNetworkParams::zeros_like() const {
  StackedNetworkParams z{encoder.zeros_like(), {}};
  for (const auto& l : decoder) z.decoder.push_back(dense_zeros(l));
  return z;
}

Tensor crop_image(const Tensor& image, std::size_t size, std::size_t top,
                  std::size_t left) {
  if (image.rank() != 3) throw DimensionError("image: expected [C x H x W]");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (size == 0 || top + size > h || left + size > w)
    throw DimensionError("crop window outside the image");
  Tensor out({c, size, size});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x)
        out(ch, y, x) = image(ch, top + y, left + x);
  return out;
}

Tensor fit_image(const Tensor& image, std::size_t size) {
  if (image.rank() != 3) throw DimensionError("image: expected [C x H x W]");
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (h == size && w == size) return image;
  if (h < size || w < size) {
    throw DimensionError("image " + std::to_string(h) + "x" + std::to_string(w) +
                         " smaller than network input " + std::to_string(size));
  }
  return crop_image(image, size, (h - size) / 2, (w - size) / 2);
}

namespace {

struct EncoderTrace {
  std::array<Tensor, 3> block_in;
  std::array<Tensor, 3> conv_pre;
  std::array<PoolResult, 3> pools;
  std::vector<Vector> fc_in;  // fc_in[0] is the flattened pool output
  std::vector<Vector> fc_pre;
  std::vector<Vector> drop_scale;
  Vector out;
};

void check_mode(const ForwardMode& mode) {
  if (mode.training && mode.dropout_p > 0.0 && mode.rng == nullptr)
    throw ParameterError("training-mode dropout needs a random stream");
}

EncoderTrace trace_encoder(const ImageEncoderParams& p, const Tensor& image,
                           const ForwardMode& mode) {
  check_mode(mode);
  Tensor x = fit_image(image, p.shape.image_size);
  if (x.dim(0) != p.shape.in_channels) {
    throw DimensionError("image: expected " + std::to_string(p.shape.in_channels) +
                         " channels, got " + std::to_string(x.dim(0)));
  }
  EncoderTrace t;
  for (std::size_t b = 0; b < 3; ++b) {
    t.block_in[b] = std::move(x);
    t.conv_pre[b] = conv2d_forward(t.block_in[b], p.conv[b].kernels, p.conv[b].bias.data());
    Tensor activated = t.conv_pre[b];
    relu_inplace(activated.data());
    t.pools[b] = maxpool2x2(activated);
    x = t.pools[b].output;
  }
  t.fc_in.emplace_back(x.values());
  RngStream dummy(0);
  for (const auto& l : p.fc) {
    t.fc_pre.push_back(dense_forward(l.weights, l.bias.data(), t.fc_in.back()));
    Vector act = relu(t.fc_pre.back());
    auto d = dropout(act, mode.dropout_p, mode.rng ? *mode.rng : dummy, mode.training);
    t.drop_scale.push_back(std::move(d.scale));
    t.fc_in.push_back(std::move(d.output));
  }
  t.out = dense_forward(p.out.weights, p.out.bias.data(), t.fc_in.back());
  return t;
}

void backward_encoder(const ImageEncoderParams& p, const EncoderTrace& t,
                      std::span<const double> dout, ImageEncoderParams& g) {
  Vector dx(t.fc_in.back().size(), 0.0);
  dense_backward_accumulate(p.out.weights, t.fc_in.back(), dout, g.out.weights,
                            g.out.bias.data(), dx);
  for (std::size_t i = p.fc.size(); i-- > 0;) {
    const Vector dact = dropout_backward(t.drop_scale[i], dx);
    const Vector dpre = relu_backward(t.fc_pre[i], dact);
    Vector dprev(t.fc_in[i].size(), 0.0);
    dense_backward_accumulate(p.fc[i].weights, t.fc_in[i], dpre, g.fc[i].weights,
                              g.fc[i].bias.data(), dprev);
    dx = std::move(dprev);
  }
  Tensor dpool(t.pools[2].output.shape(), std::move(dx));
  for (std::size_t b = 3; b-- > 0;) {
    Tensor dconv = maxpool2x2_backward(t.pools[b], dpool);
    auto dc = dconv.data();
    auto pre = t.conv_pre[b].data();
    for (std::size_t i = 0; i < dc.size(); ++i)
      if (!(pre[i] > 0.0)) dc[i] = 0.0;
    if (b == 0) {
      conv2d_backward_accumulate(t.block_in[b], p.conv[b].kernels, dconv,
                                 g.conv[b].kernels, g.conv[b].bias.data(), nullptr);
    } else {
      Tensor din = t.block_in[b].zeros_like();
      conv2d_backward_accumulate(t.block_in[b], p.conv[b].kernels, dconv,
                                 g.conv[b].kernels, g.conv[b].bias.data(), &din);
      dpool = std::move(din);
    }
  }
}

struct DecoderTrace {
  std::vector<Vector> in;
  std::vector<Vector> pre;
  Vector out;
};

DecoderTrace trace_decoder(const std::vector<DenseLayer>& decoder, Vector code) {
  DecoderTrace t;
  Vector x = std::move(code);
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    t.in.push_back(x);
    t.pre.push_back(dense_forward(decoder[i].weights, decoder[i].bias.data(), x));
    x = i + 1 < decoder.size() ? relu(t.pre.back()) : t.pre.back();
  }
  t.out = std::move(x);
  return t;
}

double squared_residual(std::span<const double> pred, std::span<const double> target,
                        Vector* grad) {
  if (pred.size() != target.size()) {
    throw DimensionError("target: expected length " + std::to_string(pred.size()) +
                         ", got " + std::to_string(target.size()));
  }
  double loss = 0.0;
  if (grad) grad->assign(pred.size(), 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - target[i];
    loss += r * r;
    if (grad) (*grad)[i] = 2.0 * r;
  }
  return loss;
}

}  // namespace

Vector cnn_forward(const ImageEncoderParams& params, const Tensor& image,
                   ForwardMode mode) {
  return trace_encoder(params, image, mode).out;
}

Vector stacked_forward(const StackedNetworkParams& params, const Tensor& image,
                       ForwardMode mode) {
  return trace_decoder(params.decoder, cnn_forward(params.encoder, image, mode)).out;
}

double latent_sample_loss(const ImageEncoderParams& params, const Tensor& image,
                          std::span<const double> target, ForwardMode mode,
                          ImageEncoderParams* grad) {
  const EncoderTrace t = trace_encoder(params, image, mode);
  Vector dout;
  const double loss = squared_residual(t.out, target, grad ? &dout : nullptr);
  if (grad) backward_encoder(params, t, dout, *grad);
  return loss;
}

double pose_sample_loss(const StackedNetworkParams& params, const Tensor& image,
                        std::span<const double> target, ForwardMode mode,
                        StackedNetworkParams* grad) {
  const EncoderTrace enc = trace_encoder(params.encoder, image, mode);
  const DecoderTrace dec = trace_decoder(params.decoder, enc.out);
  Vector dx;
  const double loss = squared_residual(dec.out, target, grad ? &dx : nullptr);
  if (!grad) return loss;
  for (std::size_t i = params.decoder.size(); i-- > 0;) {
    if (i + 1 < params.decoder.size()) dx = relu_backward(dec.pre[i], dx);
    Vector dprev(dec.in[i].size(), 0.0);
    dense_backward_accumulate(params.decoder[i].weights, dec.in[i], dx,
                              grad->decoder[i].weights, grad->decoder[i].bias.data(),
                              dprev);
    dx = std::move(dprev);
  }
  backward_encoder(params.encoder, enc, dx, grad->encoder);
  return loss;
}

void RegressionSet::validate() const {
  if (images.empty()) throw ParameterError("regression set is empty");
  if (images.size() != poses.size())
    throw DimensionError("regression set: image and pose counts differ");
  for (const auto& p : poses)
    if (p.size() != poses.front().size())
      throw DimensionError("regression set: inconsistent pose lengths");
}

void RegTrainConfig::validate() const {
  if (!(dropout_p >= 0.0 && dropout_p < 1.0))
    throw ParameterError("dropout probability must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be > 0");
  if (batch_size == 0) throw ParameterError("batch size must be > 0");
}

namespace {

/// Picks the training input: a random crop of the network input size when
/// augmenting, otherwise the center crop.
Tensor training_input(const Tensor& image, std::size_t size, bool augment,
                      RngStream& rng) {
  if (!augment) return fit_image(image, size);
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (h < size || w < size) throw DimensionError("image smaller than network input");
  const std::size_t top = rng.uniform_index(h - size + 1);
  const std::size_t left = rng.uniform_index(w - size + 1);
  return crop_image(image, size, top, left);
}

/// Mini-batch ADAM over `params`, with per-sample loss `sample_loss(params,
/// input, index, mode, grad)`. `monitor(params)` returns the quantity used for
/// best-checkpoint selection when `keep_best` is set and is also what gets
/// logged as eval when `eval` is empty.
template <class Params, class SampleLoss, class Eval>
Params run_regression(Params params, const RegressionSet& data,
                      std::size_t input_size, const RegTrainConfig& config,
                      SampleLoss&& sample_loss, std::vector<EpochRecord>* log,
                      const Eval& eval,
                      const std::function<double(const Params&)>& selection) {
  data.validate();
  config.validate();
  RngStream root(config.seed);
  RngStream shuffle_rng = root.substream(1);
  RngStream dropout_rng = root.substream(2);
  RngStream crop_rng = root.substream(3);
  Adam optimizer(AdamHyper{.learning_rate = config.learning_rate});
  const ForwardMode mode{true, config.dropout_p, &dropout_rng};

  Params best = params;
  double best_score = selection ? selection(params) : 0.0;
  Params grad = params.zeros_like();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = detail::shuffled_indices(data.size(), shuffle_rng);
    double epoch_loss = 0.0;
    detail::for_each_batch(order, config.batch_size, [&](auto first, auto last) {
      for (Tensor* t : grad.parameters()) t->fill(0.0);
      std::size_t count = 0;
      for (auto it = first; it != last; ++it, ++count) {
        const Tensor input =
            training_input(data.images[*it], input_size, config.augment, crop_rng);
        epoch_loss += sample_loss(params, input, *it, mode, &grad);
      }
      auto gs = grad.parameters();
      detail::scale_all(gs, 1.0 / static_cast<double>(count));
      auto ps = params.parameters();
      optimizer.step(ps, detail::as_const(gs));
    });
    EpochRecord rec{epoch + 1, epoch_loss / static_cast<double>(data.size()),
                    std::numeric_limits<double>::quiet_NaN()};
    if (eval) rec.eval_mpjpe = eval(params);
    if (log) log->push_back(rec);
    if (selection) {
      const double score = selection(params);
      if (score < best_score) {
        best_score = score;
        best = params;
      }
    }
  }
  return selection ? best : params;
}

StackedNetworkParams train_pose_network(StackedNetworkParams params,
                                        const RegressionSet& data,
                                        const RegTrainConfig& config,
                                        std::vector<EpochRecord>* log,
                                        const NetworkEval& eval, bool keep_best) {
  data.validate();
  if (data.poses.front().size() != params.output_dim()) {
    throw DimensionError("pose network output " + std::to_string(params.output_dim()) +
                         " does not match pose length " +
                         std::to_string(data.poses.front().size()));
  }
  std::function<double(const StackedNetworkParams&)> selection;
  if (keep_best)
    selection = [&data](const StackedNetworkParams& p) { return mean_joint_error(p, data); };
  const std::size_t input_size = params.encoder.shape.image_size;
  return run_regression(
      std::move(params), data, input_size, config,
      [&data](const StackedNetworkParams& p, const Tensor& input, std::size_t i,
              const ForwardMode& mode, StackedNetworkParams* g) {
        return pose_sample_loss(p, input, data.poses[i], mode, g);
      },
      log, eval, selection);
}

ImageEncoderParams train_encoder_targets(ImageEncoderParams cnn,
                                         const RegressionSet& data,
                                         const std::vector<Vector>& targets,
                                         const RegTrainConfig& config,
                                         std::vector<EpochRecord>* log,
                                         const EncoderEval& eval) {
  const std::size_t input_size = cnn.shape.image_size;
  return run_regression(
      std::move(cnn), data, input_size, config,
      [&targets](const ImageEncoderParams& p, const Tensor& input, std::size_t i,
                 const ForwardMode& mode, ImageEncoderParams* g) {
        return latent_sample_loss(p, input, targets[i], mode, g);
      },
      log, eval, std::function<double(const ImageEncoderParams&)>{});
}

CnnShape with_output(CnnShape shape, std::size_t dim) {
  shape.output_dim = dim;
  shape.validate();
  return shape;
}

}  // namespace

ImageEncoderParams train_latent_regression(ImageEncoderParams cnn,
                                           const AutoEncoderParams& ae,
                                           const RegressionSet& data,
                                           const RegTrainConfig& config,
                                           std::vector<EpochRecord>* log,
                                           const EncoderEval& eval) {
  data.validate();
  if (cnn.shape.output_dim != ae.latent_dim()) {
    throw DimensionError("cnn output dimension " + std::to_string(cnn.shape.output_dim) +
                         " does not match auto-encoder latent dimension " +
                         std::to_string(ae.latent_dim()));
  }
  std::vector<Vector> targets;
  targets.reserve(data.size());
  for (const auto& y : data.poses) targets.push_back(encode(ae, y));
  return train_encoder_targets(std::move(cnn), data, targets, config, log, eval);
}

StackedNetworkParams stack_decoder(const ImageEncoderParams& cnn,
                                   const AutoEncoderParams& ae) {
  if (cnn.out.weights.dim(0) != ae.latent_dim()) {
    throw DimensionError("cannot stack: cnn output dimension " +
                         std::to_string(cnn.out.weights.dim(0)) +
                         " differs from auto-encoder latent dimension " +
                         std::to_string(ae.latent_dim()));
  }
  StackedNetworkParams s{cnn, {}};
  for (std::size_t j = ae.depth(); j-- > 0;)
    s.decoder.push_back({ae.layer(j).weights.transposed(), ae.layer(j).decode_bias});
  return s;
}

StackedNetworkParams finetune_stacked(StackedNetworkParams params,
                                      const RegressionSet& data,
                                      const RegTrainConfig& config,
                                      std::vector<EpochRecord>* log,
                                      const NetworkEval& eval) {
  if (config.epochs == 0) return params;
  return train_pose_network(std::move(params), data, config, log, eval, true);
}

StackedNetworkParams train_direct_baseline(const RegressionSet& data,
                                           CnnShape shape,
                                           const RegTrainConfig& config,
                                           std::vector<EpochRecord>* log,
                                           const NetworkEval& eval) {
  data.validate();
  RngStream init = RngStream(config.seed).substream(0);
  StackedNetworkParams p{
      ImageEncoderParams::initialize(with_output(shape, data.poses.front().size()), init),
      {}};
  return train_pose_network(std::move(p), data, config, log, eval, false);
}

StackedNetworkParams train_extrafc_baseline(const RegressionSet& data,
                                            CnnShape shape,
                                            const RegTrainConfig& config,
                                            std::size_t extra_dim,
                                            std::vector<EpochRecord>* log,
                                            const NetworkEval& eval) {
  if (extra_dim == 0) throw DimensionError("extra dense layer width must be positive");
  shape.fc_widths.push_back(extra_dim);
  return train_direct_baseline(data, std::move(shape), config, log, eval);
}

PcaBaseline train_pca_baseline(const RegressionSet& data, CnnShape shape,
                               const RegTrainConfig& config, std::size_t k,
                               std::vector<EpochRecord>* log,
                               const NetworkEval& eval) {
  data.validate();
  PcaBaseline result;
  result.basis = fit_pca(data.poses, k);
  RngStream init = RngStream(config.seed).substream(0);
  auto cnn = ImageEncoderParams::initialize(with_output(shape, k), init);
  std::vector<Vector> targets;
  targets.reserve(data.size());
  for (const auto& y : data.poses) targets.push_back(result.basis.project(y));
  const DenseLayer reprojection{result.basis.components.transposed(),
                                Tensor::from_vector(result.basis.mean)};
  EncoderEval encoder_eval;
  if (eval) {
    encoder_eval = [&](const ImageEncoderParams& e) {
      return eval(StackedNetworkParams{e, {reprojection}});
    };
  }
  cnn = train_encoder_targets(std::move(cnn), data, targets, config, log, encoder_eval);
  result.network = StackedNetworkParams{std::move(cnn), {reprojection}};
  return result;
}

Pose predict_pose(const StackedNetworkParams& params, const Tensor& image) {
  return Pose::with_root_zeroed(stacked_forward(params, image));
}

double mean_joint_error(const StackedNetworkParams& params,
                        const RegressionSet& data) {
  data.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    total += mpjpe(predict_pose(params, data.images[i]), Pose(data.poses[i]));
  return total / static_cast<double>(data.size());
}

}  // namespace latentpose

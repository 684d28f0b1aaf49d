#include "latentpose/layers.hpp"

#include <string>

#include "latentpose/errors.hpp"

namespace latentpose {

namespace {

void require_len(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected length " +
                         std::to_string(want) + ", got " +
                         std::to_string(got));
  }
}

void check_dense(const Tensor& weights, std::size_t bias_len,
                 std::size_t input_len) {
  if (weights.rank() != 2) throw DimensionError("weights: expected a matrix");
  require_len(bias_len, weights.dim(0), "bias");
  require_len(input_len, weights.dim(1), "input");
}

}  // namespace

Vector dense_forward(const Tensor& weights, std::span<const double> bias,
                     std::span<const double> input) {
  check_dense(weights, bias.size(), input.size());
  const std::size_t rows = weights.dim(0);
  const std::size_t cols = weights.dim(1);
  const double* w = weights.data().data();
  Vector out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = w + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * input[j];
    out[i] = acc + bias[i];
  }
  return out;
}

void dense_backward_accumulate(const Tensor& weights,
                               std::span<const double> input,
                               std::span<const double> upstream,
                               Tensor& dweights, std::span<double> dbias,
                               std::span<double> dinput) {
  check_dense(weights, upstream.size(), input.size());
  require_shape(dweights, weights.shape(), "weight gradient");
  require_len(dbias.size(), upstream.size(), "bias gradient");
  if (!dinput.empty()) require_len(dinput.size(), input.size(), "input gradient");
  const std::size_t rows = weights.dim(0);
  const std::size_t cols = weights.dim(1);
  const double* w = weights.data().data();
  double* dw = dweights.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double g = upstream[i];
    dbias[i] += g;
    if (g == 0.0) continue;
    double* drow = dw + i * cols;
    for (std::size_t j = 0; j < cols; ++j) drow[j] += g * input[j];
    if (!dinput.empty()) {
      const double* row = w + i * cols;
      for (std::size_t j = 0; j < cols; ++j) dinput[j] += row[j] * g;
    }
  }
}

DenseGrads dense_backward(const Tensor& weights, std::span<const double> input,
                          std::span<const double> upstream) {
  check_dense(weights, upstream.size(), input.size());
  DenseGrads g{weights.zeros_like(), Vector(upstream.size(), 0.0),
               Vector(input.size(), 0.0)};
  dense_backward_accumulate(weights, input, upstream, g.weights, g.bias,
                            g.input);
  return g;
}

Vector relu(std::span<const double> input) {
  Vector out(input.begin(), input.end());
  relu_inplace(out);
  return out;
}

void relu_inplace(std::span<double> values) {
  for (auto& v : values)
    if (!(v > 0.0)) v = 0.0;
}

Vector relu_backward(std::span<const double> input,
                     std::span<const double> upstream) {
  require_len(upstream.size(), input.size(), "relu upstream");
  Vector out(input.size());
  for (std::size_t i = 0; i < input.size(); ++i)
    out[i] = input[i] > 0.0 ? upstream[i] : 0.0;
  return out;
}

namespace {

struct ConvDims {
  std::size_t channels, height, width, filters, kh, kw, out_h, out_w;
};

ConvDims conv_dims(const Tensor& input, const Tensor& kernels,
                   std::size_t bias_len) {
  if (input.rank() != 3) throw DimensionError("conv input: expected [C x H x W]");
  if (kernels.rank() != 4)
    throw DimensionError("conv kernels: expected [K x C x kh x kw]");
  ConvDims d{input.dim(0), input.dim(1), input.dim(2), kernels.dim(0),
             kernels.dim(2), kernels.dim(3), 0, 0};
  require_len(kernels.dim(1), d.channels, "conv kernel channels");
  require_len(bias_len, d.filters, "conv bias");
  if (d.kh > d.height || d.kw > d.width) {
    throw DimensionError("conv kernels: kernel " + std::to_string(d.kh) + "x" +
                         std::to_string(d.kw) + " larger than input " +
                         std::to_string(d.height) + "x" +
                         std::to_string(d.width));
  }
  d.out_h = d.height - d.kh + 1;
  d.out_w = d.width - d.kw + 1;
  return d;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels,
                      std::span<const double> bias) {
  const auto d = conv_dims(input, kernels, bias.size());
  Tensor out({d.filters, d.out_h, d.out_w});
  const double* in = input.data().data();
  const double* ker = kernels.data().data();
  double* o = out.data().data();
  for (std::size_t k = 0; k < d.filters; ++k) {
    double* ok = o + k * d.out_h * d.out_w;
    for (std::size_t i = 0; i < d.out_h * d.out_w; ++i) ok[i] = bias[k];
    for (std::size_t c = 0; c < d.channels; ++c) {
      const double* inc = in + c * d.height * d.width;
      const double* kc = ker + (k * d.channels + c) * d.kh * d.kw;
      for (std::size_t u = 0; u < d.kh; ++u) {
        for (std::size_t v = 0; v < d.kw; ++v) {
          const double kval = kc[u * d.kw + v];
          for (std::size_t y = 0; y < d.out_h; ++y) {
            const double* inrow = inc + (y + u) * d.width + v;
            double* orow = ok + y * d.out_w;
            for (std::size_t x = 0; x < d.out_w; ++x) orow[x] += kval * inrow[x];
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward_accumulate(const Tensor& input, const Tensor& kernels,
                                const Tensor& upstream, Tensor& dkernels,
                                std::span<double> dbias, Tensor* dinput) {
  const auto d = conv_dims(input, kernels, dbias.size());
  require_shape(upstream, {d.filters, d.out_h, d.out_w}, "conv upstream");
  require_shape(dkernels, kernels.shape(), "conv kernel gradient");
  if (dinput) require_shape(*dinput, input.shape(), "conv input gradient");
  const double* in = input.data().data();
  const double* ker = kernels.data().data();
  const double* up = upstream.data().data();
  double* dk = dkernels.data().data();
  for (std::size_t k = 0; k < d.filters; ++k) {
    const double* uk = up + k * d.out_h * d.out_w;
    double sum = 0.0;
    for (std::size_t i = 0; i < d.out_h * d.out_w; ++i) sum += uk[i];
    dbias[k] += sum;
    for (std::size_t c = 0; c < d.channels; ++c) {
      const double* inc = in + c * d.height * d.width;
      const std::size_t kbase = (k * d.channels + c) * d.kh * d.kw;
      double* dinc = dinput ? dinput->data().data() + c * d.height * d.width
                            : nullptr;
      for (std::size_t u = 0; u < d.kh; ++u) {
        for (std::size_t v = 0; v < d.kw; ++v) {
          const double kval = ker[kbase + u * d.kw + v];
          double acc = 0.0;
          for (std::size_t y = 0; y < d.out_h; ++y) {
            const double* inrow = inc + (y + u) * d.width + v;
            const double* urow = uk + y * d.out_w;
            for (std::size_t x = 0; x < d.out_w; ++x) acc += urow[x] * inrow[x];
            if (dinc) {
              double* drow = dinc + (y + u) * d.width + v;
              for (std::size_t x = 0; x < d.out_w; ++x) drow[x] += kval * urow[x];
            }
          }
          dk[kbase + u * d.kw + v] += acc;
        }
      }
    }
  }
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& upstream) {
  Conv2dGrads g{kernels.zeros_like(), Vector(kernels.dim(0), 0.0),
                input.zeros_like()};
  conv2d_backward_accumulate(input, kernels, upstream, g.kernels, g.bias,
                             &g.input);
  return g;
}

PoolResult maxpool2x2(const Tensor& input) {
  if (input.rank() != 3) throw DimensionError("pool input: expected [C x H x W]");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t oh = h / 2, ow = w / 2;
  if (oh == 0 || ow == 0)
    throw DimensionError("pool input: spatial size must be at least 2x2");
  PoolResult r{Tensor({c, oh, ow}), std::vector<std::size_t>(c * oh * ow),
               input.shape()};
  const double* in = input.data().data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = (ch * h + 2 * y) * w + 2 * x;
        const std::size_t candidates[3] = {best + 1, best + w, best + w + 1};
        for (auto idx : candidates)
          if (in[idx] > in[best]) best = idx;
        const std::size_t o = (ch * oh + y) * ow + x;
        r.output[o] = in[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

Tensor maxpool2x2_backward(const PoolResult& forward, const Tensor& upstream) {
  require_shape(upstream, forward.output.shape(), "pool upstream");
  Tensor grad(forward.input_shape);
  for (std::size_t o = 0; o < forward.argmax.size(); ++o)
    grad[forward.argmax[o]] += upstream[o];
  return grad;
}

DropoutResult dropout(std::span<const double> input, double p, RngStream& rng,
                      bool training) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ParameterError("dropout probability must lie in [0, 1), got " +
                         std::to_string(p));
  }
  DropoutResult r{Vector(input.begin(), input.end()),
                  Vector(input.size(), 1.0)};
  if (!training || p == 0.0) return r;
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < input.size(); ++i) {
    r.scale[i] = rng.uniform() < p ? 0.0 : keep_scale;
    r.output[i] = input[i] * r.scale[i];
  }
  return r;
}

Vector dropout_backward(std::span<const double> scale,
                        std::span<const double> upstream) {
  require_len(upstream.size(), scale.size(), "dropout upstream");
  Vector out(scale.size());
  for (std::size_t i = 0; i < scale.size(); ++i) out[i] = scale[i] * upstream[i];
  return out;
}

}  // namespace latentpose

// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include "drh/layers.hpp"

#include <cmath>

#include "drh/kernels.hpp"

namespace drh {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2D: return "Conv2D";
    case LayerKind::kBatchNorm: return "BatchNorm";
    case LayerKind::kReLU: return "ReLU";
    case LayerKind::kTanh: return "Tanh";
    case LayerKind::kResidualAdd: return "ResidualAdd";
    case LayerKind::kGlobalAvgPool: return "GlobalAvgPool";
    case LayerKind::kFullyConnected: return "FullyConnected";
  }
  return "?";
}

namespace {

template <typename T>
void require_finite(const std::string& label, const Tensor<T>& t) {
  if (!t.all_finite()) throw_numerical("layer '" + label + "': non-finite input");
}

[[noreturn]] void shape_mismatch(const std::string& label, const std::string& expected, const Shape& got) {
  throw_invalid("layer '" + label + "': expected input " + expected + ", got " + shape_string(got));
}

template <typename T>
void require_cache(const std::string& label, LayerKind kind, const LayerCache<T>& cache) {
  if (!cache.valid || cache.kind != kind) {
    throw_invalid("layer '" + label + "' (" + layer_kind_name(kind) + "): cache from " +
                  (cache.valid ? layer_kind_name(cache.kind) : "no forward pass"));
  }
  if (cache.mode != Mode::kTrain) {
    throw_invalid("layer '" + label + "': backward needs a train-mode forward pass");
  }
}

template <typename T>
void require_grad_shape(const std::string& label, const Shape& expected, const Tensor<T>& grad) {
  if (grad.shape() != expected) {
    throw_invalid("layer '" + label + "': gradient shape " + shape_string(grad.shape()) +
                  " does not match output " + shape_string(expected));
  }
}

template <typename T>
LayerCache<T> make_cache(LayerKind kind, Mode mode, const Shape& input_shape) {
  LayerCache<T> c;
  c.kind = kind;
  c.mode = mode;
  c.valid = true;
  c.input_shape = input_shape;
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Conv2D

template <typename T>
Conv2D<T>::Conv2D(std::string l, std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t p,
                  bool bias)
    : label(std::move(l)), in_channels(in), out_channels(out), kernel(k), stride(s), pad(p), has_bias(bias) {
  if (stride != 1 && stride != 2) throw_invalid("layer '" + label + "': stride must be 1 or 2");
  if (in == 0 || out == 0 || k == 0) throw_invalid("layer '" + label + "': zero-sized convolution");
  weight = Param<T>(label + ".weight", {out, in, k, k}, true);
  if (has_bias) this->bias = Param<T>(label + ".bias", {out}, false);
}

template <typename T>
Shape Conv2D<T>::output_shape(const Shape& input) const {
  if (input.size() != 4 || input[1] != in_channels) {
    shape_mismatch(label, "[N x " + std::to_string(in_channels) + " x H x W]", input);
  }
  const std::size_t oh = kernels::conv_out_extent(input[2], kernel, stride, pad);
  const std::size_t ow = kernels::conv_out_extent(input[3], kernel, stride, pad);
  if (oh == 0 || ow == 0) shape_mismatch(label, "spatial extent >= kernel - 2*pad", input);
  return {input[0], out_channels, oh, ow};
}

template <typename T>
ForwardResult<T> layer_forward(const Conv2D<T>& layer, const Tensor<T>& input, Mode mode) {
  const Shape out_shape = layer.output_shape(input.shape());
  require_finite(layer.label, input);
  const auto g = kernels::make_conv_geometry(input.dim(0), layer.in_channels, input.dim(2), input.dim(3),
                                             layer.out_channels, layer.kernel, layer.stride, layer.pad);
  ForwardResult<T> r{Tensor<T>(out_shape), make_cache<T>(LayerKind::kConv2D, mode, input.shape())};
  kernels::omp::conv2d_forward(g, input.ptr(), layer.weight.value.ptr(),
                               layer.has_bias ? layer.bias.value.ptr() : nullptr, r.output.ptr());
  if (mode == Mode::kTrain) r.cache.saved = input;
  return r;
}

template <typename T>
BackwardResult<T> layer_backward(const Conv2D<T>& layer, const LayerCache<T>& cache, const Tensor<T>& grad_output) {
  require_cache(layer.label, LayerKind::kConv2D, cache);
  const Tensor<T>& input = cache.saved;
  require_grad_shape(layer.label, layer.output_shape(input.shape()), grad_output);
  const auto g = kernels::make_conv_geometry(input.dim(0), layer.in_channels, input.dim(2), input.dim(3),
                                             layer.out_channels, layer.kernel, layer.stride, layer.pad);
  BackwardResult<T> r;
  r.grad_input = Tensor<T>(input.shape());
  r.param_grads.emplace_back(layer.weight.value.shape());
  if (layer.has_bias) r.param_grads.emplace_back(layer.bias.value.shape());
  kernels::omp::conv2d_backward(g, input.ptr(), layer.weight.value.ptr(), grad_output.ptr(), r.grad_input.ptr(),
                                r.param_grads[0].ptr(), layer.has_bias ? r.param_grads[1].ptr() : nullptr);
  return r;
}

// ---------------------------------------------------------------------------------------------
// BatchNorm (per channel over N, H, W; 2-D inputs are treated as H = W = 1)

template <typename T>
BatchNorm<T>::BatchNorm(std::string l, std::size_t c)
    : label(std::move(l)), channels(c), running_mean(Shape{c}, T(0)), running_var(Shape{c}, T(1)) {
  gamma = Param<T>(label + ".gamma", {c}, false);
  beta = Param<T>(label + ".beta", {c}, false);
  gamma.value.fill(T(1));
}

namespace {

struct ChannelLayout {
  std::size_t batch, channels, plane;
};

ChannelLayout channel_layout(const std::string& label, std::size_t channels, const Shape& s) {
  if ((s.size() != 4 && s.size() != 2) || s[1] != channels) {
    shape_mismatch(label, "[N x " + std::to_string(channels) + " (x H x W)]", s);
  }
  return {s[0], s[1], s.size() == 4 ? s[2] * s[3] : 1};
}

}  // namespace

template <typename T>
ForwardResult<T> layer_forward(BatchNorm<T>& layer, const Tensor<T>& input, Mode mode) {
  if (!(layer.epsilon > T(0))) throw_invalid("layer '" + layer.label + "': epsilon must be positive");
  const auto L = channel_layout(layer.label, layer.channels, input.shape());
  require_finite(layer.label, input);
  ForwardResult<T> r{Tensor<T>(input.shape()), make_cache<T>(LayerKind::kBatchNorm, mode, input.shape())};
  const T* x = input.ptr();
  T* y = r.output.ptr();
  const std::size_t M = L.batch * L.plane;

  if (mode == Mode::kEval) {
    for (std::size_t c = 0; c < L.channels; ++c) {
      const T inv = T(1) / std::sqrt(layer.running_var[c] + layer.epsilon);
      const T scale = layer.gamma.value[c] * inv;
      const T shift = layer.beta.value[c] - layer.running_mean[c] * scale;
      for (std::size_t n = 0; n < L.batch; ++n) {
        const std::size_t base = (n * L.channels + c) * L.plane;
        for (std::size_t i = 0; i < L.plane; ++i) y[base + i] = x[base + i] * scale + shift;
      }
    }
    return r;
  }

  r.cache.saved = Tensor<T>(input.shape());
  r.cache.inv_std.resize(L.channels);
  T* xhat = r.cache.saved.ptr();
  for (std::size_t c = 0; c < L.channels; ++c) {
    double sum = 0;
    for (std::size_t n = 0; n < L.batch; ++n) {
      const std::size_t base = (n * L.channels + c) * L.plane;
      for (std::size_t i = 0; i < L.plane; ++i) sum += x[base + i];
    }
    const double mean = sum / static_cast<double>(M);
    double sq = 0;
    for (std::size_t n = 0; n < L.batch; ++n) {
      const std::size_t base = (n * L.channels + c) * L.plane;
      for (std::size_t i = 0; i < L.plane; ++i) {
        const double d = x[base + i] - mean;
        sq += d * d;
      }
    }
    const double var = sq / static_cast<double>(M);  // biased
    const T inv = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(layer.epsilon)));
    r.cache.inv_std[c] = inv;
    const T m = static_cast<T>(mean);
    const T g = layer.gamma.value[c], b = layer.beta.value[c];
    for (std::size_t n = 0; n < L.batch; ++n) {
      const std::size_t base = (n * L.channels + c) * L.plane;
      for (std::size_t i = 0; i < L.plane; ++i) {
        const T xh = (x[base + i] - m) * inv;
        xhat[base + i] = xh;
        y[base + i] = g * xh + b;
      }
    }
    layer.running_mean[c] = layer.momentum * layer.running_mean[c] + (T(1) - layer.momentum) * m;
    layer.running_var[c] = layer.momentum * layer.running_var[c] + (T(1) - layer.momentum) * static_cast<T>(var);
  }
  return r;
}

template <typename T>
BackwardResult<T> layer_backward(const BatchNorm<T>& layer, const LayerCache<T>& cache,
                                 const Tensor<T>& grad_output) {
  require_cache(layer.label, LayerKind::kBatchNorm, cache);
  require_grad_shape(layer.label, cache.input_shape, grad_output);
  const auto L = channel_layout(layer.label, layer.channels, cache.input_shape);
  const std::size_t M = L.batch * L.plane;
  BackwardResult<T> r;
  r.grad_input = Tensor<T>(cache.input_shape);
  r.param_grads.emplace_back(Shape{L.channels});
  r.param_grads.emplace_back(Shape{L.channels});
  const T* dy = grad_output.ptr();
  const T* xhat = cache.saved.ptr();
  T* dx = r.grad_input.ptr();
  for (std::size_t c = 0; c < L.channels; ++c) {
    double dgamma = 0, dbeta = 0;
    for (std::size_t n = 0; n < L.batch; ++n) {
      const std::size_t base = (n * L.channels + c) * L.plane;
      for (std::size_t i = 0; i < L.plane; ++i) {
        dgamma += static_cast<double>(dy[base + i]) * xhat[base + i];
        dbeta += dy[base + i];
      }
    }
    r.param_grads[0][c] = static_cast<T>(dgamma);
    r.param_grads[1][c] = static_cast<T>(dbeta);
    const T k = layer.gamma.value[c] * cache.inv_std[c] / static_cast<T>(M);
    const T mean_dy = static_cast<T>(dbeta);
    const T mean_dyx = static_cast<T>(dgamma);
    for (std::size_t n = 0; n < L.batch; ++n) {
      const std::size_t base = (n * L.channels + c) * L.plane;
      for (std::size_t i = 0; i < L.plane; ++i) {
        dx[base + i] = k * (static_cast<T>(M) * dy[base + i] - mean_dy - xhat[base + i] * mean_dyx);
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------------------------
// Element-wise and pooling layers

template <typename T>
ForwardResult<T> layer_forward(const ReLU& layer, const Tensor<T>& input, Mode mode) {
  require_finite(layer.label, input);
  ForwardResult<T> r{Tensor<T>(input.shape()), make_cache<T>(LayerKind::kReLU, mode, input.shape())};
  for (std::size_t i = 0; i < input.size(); ++i) r.output[i] = input[i] > T(0) ? input[i] : T(0);
  if (mode == Mode::kTrain) r.cache.saved = input;
  return r;
}

template <typename T>
BackwardResult<T> layer_backward(const ReLU& layer, const LayerCache<T>& cache, const Tensor<T>& grad_output) {
  require_cache(layer.label, LayerKind::kReLU, cache);
  require_grad_shape(layer.label, cache.input_shape, grad_output);
  BackwardResult<T> r{Tensor<T>(cache.input_shape), {}};
  for (std::size_t i = 0; i < grad_output.size(); ++i) {
    r.grad_input[i] = cache.saved[i] > T(0) ? grad_output[i] : T(0);
  }
  return r;
}

template <typename T>
ForwardResult<T> layer_forward(const Tanh& layer, const Tensor<T>& input, Mode mode) {
  require_finite(layer.label, input);
  ForwardResult<T> r{Tensor<T>(input.shape()), make_cache<T>(LayerKind::kTanh, mode, input.shape())};
  for (std::size_t i = 0; i < input.size(); ++i) r.output[i] = std::tanh(input[i]);
  if (mode == Mode::kTrain) r.cache.saved = r.output;
  return r;
}

template <typename T>
BackwardResult<T> layer_backward(const Tanh& layer, const LayerCache<T>& cache, const Tensor<T>& grad_output) {
  require_cache(layer.label, LayerKind::kTanh, cache);
  require_grad_shape(layer.label, cache.input_shape, grad_output);
  BackwardResult<T> r{Tensor<T>(cache.input_shape), {}};
  for (std::size_t i = 0; i < grad_output.size(); ++i) {
    const T y = cache.saved[i];
    r.grad_input[i] = grad_output[i] * (T(1) - y * y);
  }
  return r;
}

template <typename T>
ForwardResult<T> layer_forward(const ResidualAdd& layer, const Tensor<T>& main, const Tensor<T>& shortcut,
                               Mode mode) {
  if (main.shape() != shortcut.shape()) {
    throw_invalid("layer '" + layer.label + "': main branch " + shape_string(main.shape()) + " vs shortcut " +
                  shape_string(shortcut.shape()));
  }
  require_finite(layer.label, main);
  require_finite(layer.label, shortcut);
  ForwardResult<T> r{Tensor<T>(main.shape()), make_cache<T>(LayerKind::kResidualAdd, mode, main.shape())};
  for (std::size_t i = 0; i < main.size(); ++i) r.output[i] = main[i] + shortcut[i];
  return r;
}

template <typename T>
BackwardResult<T> layer_backward(const ResidualAdd& layer, const LayerCache<T>& cache,
                                 const Tensor<T>& grad_output) {
  require_cache(layer.label, LayerKind::kResidualAdd, cache);
  require_grad_shape(layer.label, cache.input_shape, grad_output);
  return {grad_output, {}};
}

template <typename T>
ForwardResult<T> layer_forward(const GlobalAvgPool& layer, const Tensor<T>& input, Mode mode) {
  if (input.rank() != 4) shape_mismatch(layer.label, "[N x C x H x W]", input.shape());
  require_finite(layer.label, input);
  const std::size_t N = input.dim(0), C = input.dim(1), plane = input.dim(2) * input.dim(3);
  ForwardResult<T> r{Tensor<T>(Shape{N, C}), make_cache<T>(LayerKind::kGlobalAvgPool, mode, input.shape())};
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const T* p = input.ptr() + (n * C + c) * plane;
      T acc = 0;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      r.output.at(n, c) = acc / static_cast<T>(plane);
    }
  }
  return r;
}

template <typename T>
BackwardResult<T> layer_backward(const GlobalAvgPool& layer, const LayerCache<T>& cache,
                                 const Tensor<T>& grad_output) {
  require_cache(layer.label, LayerKind::kGlobalAvgPool, cache);
  const Shape& s = cache.input_shape;
  require_grad_shape(layer.label, Shape{s[0], s[1]}, grad_output);
  const std::size_t plane = s[2] * s[3];
  BackwardResult<T> r{Tensor<T>(s), {}};
  for (std::size_t nc = 0; nc < s[0] * s[1]; ++nc) {
    const T g = grad_output[nc] / static_cast<T>(plane);
    std::fill(r.grad_input.ptr() + nc * plane, r.grad_input.ptr() + (nc + 1) * plane, g);
  }
  return r;
}

template <typename T>
FullyConnected<T>::FullyConnected(std::string l, std::size_t in, std::size_t out)
    : label(std::move(l)), in_features(in), out_features(out) {
  if (in == 0 || out == 0) throw_invalid("layer '" + label + "': zero-sized fully connected layer");
  weight = Param<T>(label + ".weight", {out, in}, true);
  bias = Param<T>(label + ".bias", {out}, false);
}

template <typename T>
ForwardResult<T> layer_forward(const FullyConnected<T>& layer, const Tensor<T>& input, Mode mode) {
  if (input.rank() != 2 || input.dim(1) != layer.in_features) {
    shape_mismatch(layer.label, "[N x " + std::to_string(layer.in_features) + "]", input.shape());
  }
  require_finite(layer.label, input);
  const std::size_t N = input.dim(0), D = layer.in_features, K = layer.out_features;
  ForwardResult<T> r{Tensor<T>(Shape{N, K}), make_cache<T>(LayerKind::kFullyConnected, mode, input.shape())};
  const T* W = layer.weight.value.ptr();
  for (std::size_t n = 0; n < N; ++n) {
    const T* x = input.ptr() + n * D;
    for (std::size_t k = 0; k < K; ++k) {
      T acc = layer.bias.value[k];
      for (std::size_t d = 0; d < D; ++d) acc += W[k * D + d] * x[d];
      r.output.at(n, k) = acc;
    }
  }
  if (mode == Mode::kTrain) r.cache.saved = input;
  return r;
}

template <typename T>
BackwardResult<T> layer_backward(const FullyConnected<T>& layer, const LayerCache<T>& cache,
                                 const Tensor<T>& grad_output) {
  require_cache(layer.label, LayerKind::kFullyConnected, cache);
  const std::size_t N = cache.input_shape[0], D = layer.in_features, K = layer.out_features;
  require_grad_shape(layer.label, Shape{N, K}, grad_output);
  BackwardResult<T> r;
  r.grad_input = Tensor<T>(cache.input_shape);
  r.param_grads.emplace_back(Shape{K, D});
  r.param_grads.emplace_back(Shape{K});
  const T* W = layer.weight.value.ptr();
  const T* X = cache.saved.ptr();
  T* dW = r.param_grads[0].ptr();
  T* db = r.param_grads[1].ptr();
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) {
      const T g = grad_output.at(n, k);
      db[k] += g;
      for (std::size_t d = 0; d < D; ++d) {
        dW[k * D + d] += g * X[n * D + d];
        r.grad_input[n * D + d] += g * W[k * D + d];
      }
    }
  }
  return r;
}

#define DRH_INSTANTIATE_LAYERS(T)                                                                        \
  template struct Conv2D<T>;                                                                             \
  template struct BatchNorm<T>;                                                                          \
  template struct FullyConnected<T>;                                                                     \
  template ForwardResult<T> layer_forward(const Conv2D<T>&, const Tensor<T>&, Mode);                     \
  template ForwardResult<T> layer_forward(BatchNorm<T>&, const Tensor<T>&, Mode);                        \
  template ForwardResult<T> layer_forward(const ReLU&, const Tensor<T>&, Mode);                          \
  template ForwardResult<T> layer_forward(const Tanh&, const Tensor<T>&, Mode);                          \
  template ForwardResult<T> layer_forward(const GlobalAvgPool&, const Tensor<T>&, Mode);                 \
  template ForwardResult<T> layer_forward(const FullyConnected<T>&, const Tensor<T>&, Mode);             \
  template ForwardResult<T> layer_forward(const ResidualAdd&, const Tensor<T>&, const Tensor<T>&, Mode); \
  template BackwardResult<T> layer_backward(const Conv2D<T>&, const LayerCache<T>&, const Tensor<T>&);   \
  template BackwardResult<T> layer_backward(const BatchNorm<T>&, const LayerCache<T>&, const Tensor<T>&); \
  template BackwardResult<T> layer_backward(const ReLU&, const LayerCache<T>&, const Tensor<T>&);        \
  template BackwardResult<T> layer_backward(const Tanh&, const LayerCache<T>&, const Tensor<T>&);        \
  template BackwardResult<T> layer_backward(const GlobalAvgPool&, const LayerCache<T>&, const Tensor<T>&); \
  template BackwardResult<T> layer_backward(const FullyConnected<T>&, const LayerCache<T>&, const Tensor<T>&); \
  template BackwardResult<T> layer_backward(const ResidualAdd&, const LayerCache<T>&, const Tensor<T>&);

DRH_INSTANTIATE_LAYERS(float)
DRH_INSTANTIATE_LAYERS(double)

}  // namespace drh

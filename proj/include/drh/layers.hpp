// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

#include <string>
#include <vector>

#include "drh/tensor.hpp"

namespace drh {

enum class Mode { kTrain, kEval };

enum class LayerKind { kConv2D, kBatchNorm, kReLU, kTanh, kResidualAdd, kGlobalAvgPool, kFullyConnected };

const char* layer_kind_name(LayerKind kind);

/// What a forward pass leaves behind for the matching backward pass.
template <typename T>
struct LayerCache {
  LayerKind kind = LayerKind::kReLU;
  Mode mode = Mode::kEval;
  bool valid = false;
  Tensor<T> saved;           // layer input (conv, relu, fc), x-hat (bn) or output (tanh)
  Shape input_shape;
  std::vector<T> inv_std;    // bn only
};

template <typename T>
struct ForwardResult {
  Tensor<T> output;
  LayerCache<T> cache;
};

template <typename T>
struct BackwardResult {
  Tensor<T> grad_input;
  std::vector<Tensor<T>> param_grads;  // one per learnable parameter, in declaration order
};

/// A learnable tensor with its gradient buffer.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool decay = true;  // weight decay applies to conv/fc weights only

  Param() = default;
  Param(std::string n, Shape shape, bool decays)
      : name(std::move(n)), value(shape), grad(shape), decay(decays) {}
};

template <typename T>
struct Conv2D {
  std::string label;
  std::size_t in_channels = 1, out_channels = 1, kernel = 3, stride = 1, pad = 1;
  bool has_bias = false;
  Param<T> weight;  // out x in x k x k
  Param<T> bias;    // out (empty when !has_bias)

  Conv2D() = default;
  Conv2D(std::string label, std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
         std::size_t pad, bool bias);
  Shape output_shape(const Shape& input) const;
};

template <typename T>
struct BatchNorm {
  std::string label;
  std::size_t channels = 1;
  T epsilon = T(1e-5);
  T momentum = T(0.9);  // running <- momentum * running + (1 - momentum) * batch
  Param<T> gamma;
  Param<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;

  BatchNorm() = default;
  BatchNorm(std::string label, std::size_t channels);
};

struct ReLU {
  std::string label = "relu";
};
struct Tanh {
  std::string label = "tanh";
};
struct ResidualAdd {
  std::string label = "add";
};
struct GlobalAvgPool {
  std::string label = "pool";
};

template <typename T>
struct FullyConnected {
  std::string label;
  std::size_t in_features = 1, out_features = 1;
  Param<T> weight;  // out x in
  Param<T> bias;    // out

  FullyConnected() = default;
  FullyConnected(std::string label, std::size_t in, std::size_t out);
};

template <typename T>
ForwardResult<T> layer_forward(const Conv2D<T>& layer, const Tensor<T>& input, Mode mode);
template <typename T>
ForwardResult<T> layer_forward(BatchNorm<T>& layer, const Tensor<T>& input, Mode mode);
template <typename T>
ForwardResult<T> layer_forward(const ReLU& layer, const Tensor<T>& input, Mode mode);
template <typename T>
ForwardResult<T> layer_forward(const Tanh& layer, const Tensor<T>& input, Mode mode);
template <typename T>
ForwardResult<T> layer_forward(const GlobalAvgPool& layer, const Tensor<T>& input, Mode mode);
template <typename T>
ForwardResult<T> layer_forward(const FullyConnected<T>& layer, const Tensor<T>& input, Mode mode);
template <typename T>
ForwardResult<T> layer_forward(const ResidualAdd& layer, const Tensor<T>& main, const Tensor<T>& shortcut,
                               Mode mode);

template <typename T>
BackwardResult<T> layer_backward(const Conv2D<T>& layer, const LayerCache<T>& cache, const Tensor<T>& grad_output);
template <typename T>
BackwardResult<T> layer_backward(const BatchNorm<T>& layer, const LayerCache<T>& cache,
                                 const Tensor<T>& grad_output);
template <typename T>
BackwardResult<T> layer_backward(const ReLU& layer, const LayerCache<T>& cache, const Tensor<T>& grad_output);
template <typename T>
BackwardResult<T> layer_backward(const Tanh& layer, const LayerCache<T>& cache, const Tensor<T>& grad_output);
template <typename T>
BackwardResult<T> layer_backward(const GlobalAvgPool& layer, const LayerCache<T>& cache,
                                 const Tensor<T>& grad_output);
template <typename T>
BackwardResult<T> layer_backward(const FullyConnected<T>& layer, const LayerCache<T>& cache,
                                 const Tensor<T>& grad_output);
// The sum has two inputs with the same gradient; grad_input applies to both.
template <typename T>
BackwardResult<T> layer_backward(const ResidualAdd& layer, const LayerCache<T>& cache,
                                 const Tensor<T>& grad_output);

}  // namespace drh

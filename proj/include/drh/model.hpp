// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drh/layers.hpp"

namespace drh {

struct NetworkConfig {
  std::size_t in_channels = 1;
  std::size_t in_height = 32;
  std::size_t in_width = 32;
  std::array<std::size_t, 4> stage_widths{8, 16, 32, 64};
  std::array<std::size_t, 4> block_counts{2, 2, 2, 2};
  std::size_t bits = 64;
  std::uint64_t seed = 1;
  bool residual = true;  // false gives the plain (shortcut-free) network

  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

/// Smallest spatial extent that survives the three stride-2 stages with a non-trivial map.
inline constexpr std::size_t kMinInputExtent = 8;

/// "18-layer" = (2,2,2,2), "34-layer" = (3,4,6,3).
std::array<std::size_t, 4> block_preset(const std::string& name);

template <typename T>
struct ResidualBlock {
  Conv2D<T> conv1;
  BatchNorm<T> bn1;
  ReLU relu1;
  Conv2D<T> conv2;
  BatchNorm<T> bn2;
  std::optional<Conv2D<T>> proj_conv;  // 1x1 stride-2 projection when the shape changes
  std::optional<BatchNorm<T>> proj_bn;
  ResidualAdd add;
  ReLU relu_out;
  bool residual = true;

  struct Caches {
    LayerCache<T> conv1, bn1, relu1, conv2, bn2, proj_conv, proj_bn, add, relu_out;
  } cache;
};

/// Non-owning view of one learnable tensor.
template <typename T>
struct ParamRef {
  Param<T>* param;
  bool is_hash_weight;
};

template <typename T>
class Network {
 public:
  NetworkConfig config;
  Conv2D<T> stem_conv;
  BatchNorm<T> stem_bn;
  ReLU stem_relu;
  std::vector<ResidualBlock<T>> blocks;
  GlobalAvgPool pool;
  FullyConnected<T> hash_fc;  // W_h: bits x final width
  Tanh hash_tanh;

  struct Caches {
    LayerCache<T> stem_conv, stem_bn, stem_relu, pool, hash_fc, hash_tanh;
  } cache;

  /// Every learnable tensor, in a fixed order (stem, blocks, hash layer).
  std::vector<ParamRef<T>> parameters();
  std::vector<const Param<T>*> parameters() const;
  /// BN running statistics, keyed by name; part of the checkpoint.
  std::vector<std::pair<std::string, Tensor<T>*>> buffers();
  std::vector<std::pair<std::string, const Tensor<T>*>> buffers() const;

  std::size_t parameter_count() const;
  void zero_grad();
  bool has_train_caches() const { return cache.hash_tanh.valid && cache.hash_tanh.mode == Mode::kTrain; }
};

template <typename T>
Network<T> build_network(const NetworkConfig& config);

/// Same topology and values in another precision (gradient checks run in double).
template <typename U, typename T>
Network<U> network_cast(const Network<T>& net);

/// One residual (or plain) block; train mode fills blk.cache.
template <typename T>
Tensor<T> block_forward(ResidualBlock<T>& blk, const Tensor<T>& x, Mode mode);

/// N x C x H x W batch -> N x bits activations in (-1, 1). Train mode keeps caches.
template <typename T>
Tensor<T> forward_hash(Network<T>& net, const Tensor<T>& batch, Mode mode);

/// Back-propagates dJ/dH through the cached train-mode pass; overwrites every Param::grad.
template <typename T>
void backward_hash(Network<T>& net, const Tensor<T>& grad_h);

/// Codes in {-1, +1}; sign(0) := +1.
struct BinaryCodes {
  std::size_t rows = 0;
  std::size_t bits = 0;
  std::vector<std::int8_t> values;  // row-major rows x bits

  std::int8_t at(std::size_t r, std::size_t k) const { return values[r * bits + k]; }
};

template <typename T>
BinaryCodes binarize(const Tensor<T>& activations);

// Checkpoint: "DRH1", u32 version, length-prefixed key=value config block, then named f32 tensors.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Network<float>& net,
                     const std::map<std::string, std::string>& extra = {});
std::vector<std::uint8_t> serialize_checkpoint(const Network<float>& net,
                                               const std::map<std::string, std::string>& extra);
Network<float> load_checkpoint(const std::string& path, std::map<std::string, std::string>* extra = nullptr);
Network<float> deserialize_checkpoint(const std::vector<std::uint8_t>& bytes,
                                      std::map<std::string, std::string>* extra = nullptr);

}  // namespace drh

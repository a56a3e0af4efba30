// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include "drh/model.hpp"

#include <cmath>
#include <random>
#include <utility>

namespace drh {

void NetworkConfig::validate() const {
  if (in_channels == 0) throw_invalid("network: input needs at least one channel");
  if (in_height < kMinInputExtent || in_width < kMinInputExtent) {
    throw_invalid("network: input " + std::to_string(in_height) + "x" + std::to_string(in_width) +
                  " is too small for three stride-2 stages; minimum is " + std::to_string(kMinInputExtent) + "x" +
                  std::to_string(kMinInputExtent));
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (stage_widths[i] == 0) throw_invalid("network: stage widths must be positive");
    if (block_counts[i] == 0) throw_invalid("network: every stage needs at least one block");
  }
  if (bits == 0) throw_invalid("network: code size must be at least 1 bit");
}

std::array<std::size_t, 4> block_preset(const std::string& name) {
  if (name == "18-layer" || name == "18") return {2, 2, 2, 2};
  if (name == "34-layer" || name == "34") return {3, 4, 6, 3};
  throw_invalid("unknown depth preset '" + name + "' (expected 18-layer or 34-layer)");
}

namespace {

template <typename T>
void he_init(Tensor<T>& w, std::size_t fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (auto& v : w.values()) v = static_cast<T>(normal(rng));
}

template <typename T>
void init_conv(Conv2D<T>& c, std::mt19937_64& rng) {
  he_init(c.weight.value, c.in_channels * c.kernel * c.kernel, rng);
}

}  // namespace

template <typename T>
Network<T> build_network(const NetworkConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  Network<T> net;
  net.config = config;
  net.stem_conv = Conv2D<T>("stem.conv", config.in_channels, config.stage_widths[0], 3, 1, 1, false);
  net.stem_bn = BatchNorm<T>("stem.bn", config.stage_widths[0]);
  net.stem_relu.label = "stem.relu";
  init_conv(net.stem_conv, rng);

  std::size_t in_c = config.stage_widths[0];
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t width = config.stage_widths[s];
    for (std::size_t b = 0; b < config.block_counts[s]; ++b) {
      const std::string p = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      ResidualBlock<T> blk;
      blk.residual = config.residual;
      blk.conv1 = Conv2D<T>(p + ".conv1", in_c, width, 3, stride, 1, false);
      blk.bn1 = BatchNorm<T>(p + ".bn1", width);
      blk.relu1.label = p + ".relu1";
      blk.conv2 = Conv2D<T>(p + ".conv2", width, width, 3, 1, 1, false);
      blk.bn2 = BatchNorm<T>(p + ".bn2", width);
      blk.add.label = p + ".add";
      blk.relu_out.label = p + ".relu";
      init_conv(blk.conv1, rng);
      init_conv(blk.conv2, rng);
      if (config.residual && (stride != 1 || in_c != width)) {
        blk.proj_conv = Conv2D<T>(p + ".proj.conv", in_c, width, 1, stride, 0, false);
        blk.proj_bn = BatchNorm<T>(p + ".proj.bn", width);
        init_conv(*blk.proj_conv, rng);
      }
      net.blocks.push_back(std::move(blk));
      in_c = width;
    }
  }
  net.pool.label = "pool";
  net.hash_fc = FullyConnected<T>("hash", in_c, config.bits);
  he_init(net.hash_fc.weight.value, in_c, rng);
  net.hash_tanh.label = "hash.tanh";
  return net;
}

template <typename T>
std::vector<ParamRef<T>> Network<T>::parameters() {
  std::vector<ParamRef<T>> out;
  auto conv = [&](Conv2D<T>& c) {
    out.push_back({&c.weight, false});
    if (c.has_bias) out.push_back({&c.bias, false});
  };
  auto bn = [&](BatchNorm<T>& b) {
    out.push_back({&b.gamma, false});
    out.push_back({&b.beta, false});
  };
  conv(stem_conv);
  bn(stem_bn);
  for (auto& blk : blocks) {
    conv(blk.conv1);
    bn(blk.bn1);
    conv(blk.conv2);
    bn(blk.bn2);
    if (blk.proj_conv) {
      conv(*blk.proj_conv);
      bn(*blk.proj_bn);
    }
  }
  out.push_back({&hash_fc.weight, true});
  out.push_back({&hash_fc.bias, false});
  return out;
}

template <typename T>
std::vector<const Param<T>*> Network<T>::parameters() const {
  std::vector<const Param<T>*> out;
  for (const auto& r : const_cast<Network<T>*>(this)->parameters()) out.push_back(r.param);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> Network<T>::buffers() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  auto bn = [&](BatchNorm<T>& b) {
    out.emplace_back(b.label + ".running_mean", &b.running_mean);
    out.emplace_back(b.label + ".running_var", &b.running_var);
  };
  bn(stem_bn);
  for (auto& blk : blocks) {
    bn(blk.bn1);
    bn(blk.bn2);
    if (blk.proj_bn) bn(*blk.proj_bn);
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> Network<T>::buffers() const {
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  for (auto& [name, t] : const_cast<Network<T>*>(this)->buffers()) out.emplace_back(name, t);
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& r : parameters()) r.param->grad.fill(T(0));
}

template <typename U, typename T>
Network<U> network_cast(const Network<T>& net) {
  Network<U> out = build_network<U>(net.config);
  auto src = net.parameters();
  auto dst = out.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i].param->value = src[i]->value.template cast<U>();
    dst[i].param->grad = src[i]->grad.template cast<U>();
  }
  auto sb = net.buffers();
  auto db = out.buffers();
  for (std::size_t i = 0; i < sb.size(); ++i) *db[i].second = sb[i].second->template cast<U>();
  return out;
}

template <typename T>
Tensor<T> block_forward(ResidualBlock<T>& blk, const Tensor<T>& x, Mode mode) {
  auto& c = blk.cache;
  auto r = layer_forward(blk.conv1, x, mode);
  c.conv1 = std::move(r.cache);
  r = layer_forward(blk.bn1, r.output, mode);
  c.bn1 = std::move(r.cache);
  r = layer_forward(blk.relu1, r.output, mode);
  c.relu1 = std::move(r.cache);
  r = layer_forward(blk.conv2, r.output, mode);
  c.conv2 = std::move(r.cache);
  r = layer_forward(blk.bn2, r.output, mode);
  c.bn2 = std::move(r.cache);
  if (blk.residual) {
    Tensor<T> shortcut;
    if (blk.proj_conv) {
      auto p = layer_forward(*blk.proj_conv, x, mode);
      c.proj_conv = std::move(p.cache);
      p = layer_forward(*blk.proj_bn, p.output, mode);
      c.proj_bn = std::move(p.cache);
      shortcut = std::move(p.output);
    } else {
      shortcut = x;
    }
    r = layer_forward(blk.add, r.output, shortcut, mode);
    c.add = std::move(r.cache);
  }
  r = layer_forward(blk.relu_out, r.output, mode);
  c.relu_out = std::move(r.cache);
  return std::move(r.output);
}

namespace {

template <typename T>
void set_grad(Param<T>& p, Tensor<T>&& g) {
  p.grad = std::move(g);
}

template <typename T>
Tensor<T> block_backward(ResidualBlock<T>& blk, const Tensor<T>& grad_out) {
  auto& c = blk.cache;
  auto g = layer_backward(blk.relu_out, c.relu_out, grad_out).grad_input;
  Tensor<T> grad_shortcut;
  if (blk.residual) {
    g = layer_backward(blk.add, c.add, g).grad_input;
    if (blk.proj_conv) {
      auto pb = layer_backward(*blk.proj_bn, c.proj_bn, g);
      set_grad(blk.proj_bn->gamma, std::move(pb.param_grads[0]));
      set_grad(blk.proj_bn->beta, std::move(pb.param_grads[1]));
      auto pc = layer_backward(*blk.proj_conv, c.proj_conv, pb.grad_input);
      set_grad(blk.proj_conv->weight, std::move(pc.param_grads[0]));
      grad_shortcut = std::move(pc.grad_input);
    } else {
      grad_shortcut = g;
    }
  }
  auto b2 = layer_backward(blk.bn2, c.bn2, g);
  set_grad(blk.bn2.gamma, std::move(b2.param_grads[0]));
  set_grad(blk.bn2.beta, std::move(b2.param_grads[1]));
  auto c2 = layer_backward(blk.conv2, c.conv2, b2.grad_input);
  set_grad(blk.conv2.weight, std::move(c2.param_grads[0]));
  auto r1 = layer_backward(blk.relu1, c.relu1, c2.grad_input);
  auto b1 = layer_backward(blk.bn1, c.bn1, r1.grad_input);
  set_grad(blk.bn1.gamma, std::move(b1.param_grads[0]));
  set_grad(blk.bn1.beta, std::move(b1.param_grads[1]));
  auto c1 = layer_backward(blk.conv1, c.conv1, b1.grad_input);
  set_grad(blk.conv1.weight, std::move(c1.param_grads[0]));
  Tensor<T> grad_in = std::move(c1.grad_input);
  if (blk.residual) {
    for (std::size_t i = 0; i < grad_in.size(); ++i) grad_in[i] += grad_shortcut[i];
  }
  return grad_in;
}

}  // namespace

template <typename T>
Tensor<T> forward_hash(Network<T>& net, const Tensor<T>& batch, Mode mode) {
  const auto& cfg = net.config;
  if (batch.rank() != 4 || batch.dim(1) != cfg.in_channels || batch.dim(2) != cfg.in_height ||
      batch.dim(3) != cfg.in_width) {
    throw_invalid("forward_hash: batch " + shape_string(batch.shape()) + " does not match network input [N x " +
                  std::to_string(cfg.in_channels) + " x " + std::to_string(cfg.in_height) + " x " +
                  std::to_string(cfg.in_width) + "]");
  }
  if (batch.dim(0) == 0) throw_invalid("forward_hash: empty batch");
  auto& c = net.cache;
  auto r = layer_forward(net.stem_conv, batch, mode);
  c.stem_conv = std::move(r.cache);
  r = layer_forward(net.stem_bn, r.output, mode);
  c.stem_bn = std::move(r.cache);
  r = layer_forward(net.stem_relu, r.output, mode);
  c.stem_relu = std::move(r.cache);
  Tensor<T> x = std::move(r.output);
  for (auto& blk : net.blocks) x = block_forward(blk, x, mode);
  r = layer_forward(net.pool, x, mode);
  c.pool = std::move(r.cache);
  r = layer_forward(net.hash_fc, r.output, mode);
  c.hash_fc = std::move(r.cache);
  r = layer_forward(net.hash_tanh, r.output, mode);
  c.hash_tanh = std::move(r.cache);
  return std::move(r.output);
}

template <typename T>
void backward_hash(Network<T>& net, const Tensor<T>& grad_h) {
  if (!net.has_train_caches()) throw_invalid("backward_hash: no train-mode forward pass to differentiate");
  if (!grad_h.all_finite()) throw_numerical("backward_hash: non-finite dJ/dH");
  auto& c = net.cache;
  auto g = layer_backward(net.hash_tanh, c.hash_tanh, grad_h).grad_input;
  auto fc = layer_backward(net.hash_fc, c.hash_fc, g);
  set_grad(net.hash_fc.weight, std::move(fc.param_grads[0]));
  set_grad(net.hash_fc.bias, std::move(fc.param_grads[1]));
  g = layer_backward(net.pool, c.pool, fc.grad_input).grad_input;
  for (auto it = net.blocks.rbegin(); it != net.blocks.rend(); ++it) g = block_backward(*it, g);
  g = layer_backward(net.stem_relu, c.stem_relu, g).grad_input;
  auto bn = layer_backward(net.stem_bn, c.stem_bn, g);
  set_grad(net.stem_bn.gamma, std::move(bn.param_grads[0]));
  set_grad(net.stem_bn.beta, std::move(bn.param_grads[1]));
  auto conv = layer_backward(net.stem_conv, c.stem_conv, bn.grad_input);
  set_grad(net.stem_conv.weight, std::move(conv.param_grads[0]));
  for (const auto* p : std::as_const(net).parameters()) {
    if (!p->grad.all_finite()) throw_numerical("backward_hash: non-finite gradient for " + p->name);
  }
}

template <typename T>
BinaryCodes binarize(const Tensor<T>& activations) {
  if (activations.rank() != 2) throw_invalid("binarize: expected N x K activations, got " +
                                             shape_string(activations.shape()));
  BinaryCodes out;
  out.rows = activations.dim(0);
  out.bits = activations.dim(1);
  out.values.resize(activations.size());
  for (std::size_t i = 0; i < activations.size(); ++i) out.values[i] = activations[i] >= T(0) ? 1 : -1;
  return out;
}

template class Network<float>;
template class Network<double>;
template Network<float> build_network<float>(const NetworkConfig&);
template Network<double> build_network<double>(const NetworkConfig&);
template Network<double> network_cast<double, float>(const Network<float>&);
template Network<float> network_cast<float, double>(const Network<double>&);
template Network<float> network_cast<float, float>(const Network<float>&);
template Network<double> network_cast<double, double>(const Network<double>&);
template Tensor<float> block_forward(ResidualBlock<float>&, const Tensor<float>&, Mode);
template Tensor<double> block_forward(ResidualBlock<double>&, const Tensor<double>&, Mode);
template Tensor<float> forward_hash(Network<float>&, const Tensor<float>&, Mode);
template Tensor<double> forward_hash(Network<double>&, const Tensor<double>&, Mode);
template void backward_hash(Network<float>&, const Tensor<float>&);
template void backward_hash(Network<double>&, const Tensor<double>&);
template BinaryCodes binarize(const Tensor<float>&);
template BinaryCodes binarize(const Tensor<double>&);

}  // namespace drh

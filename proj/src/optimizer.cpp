// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include "drh/optimizer.hpp"

#include <cmath>

namespace drh {

template <typename T>
TrainState<T> make_train_state(const Network<T>& net, double learning_rate) {
  if (!(learning_rate > 0)) throw_invalid("train state: learning rate must be positive");
  TrainState<T> s;
  s.learning_rate = learning_rate;
  for (const auto* p : net.parameters()) s.velocity.emplace_back(p->value.shape());
  return s;
}

template <typename T>
Tensor<T> regularized_gradient(const ParamRef<T>& ref, const Hyperparams& hyper) {
  const Param<T>& p = *ref.param;
  Tensor<T> g = p.grad;
  if (ref.is_hash_weight && hyper.lambda_o != 0) {
    const auto ro = orthogonality_reg(p.value);
    const T lo = static_cast<T>(hyper.lambda_o);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += lo * ro.grad[i];
  }
  if (p.decay && hyper.lambda_w != 0) {
    const T lw = static_cast<T>(hyper.lambda_w);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += lw * p.value[i];
  }
  return g;
}

template <typename T>
void sgd_momentum_step(Network<T>& net, TrainState<T>& state, const Hyperparams& hyper) {
  if (!(hyper.momentum >= 0 && hyper.momentum < 1)) throw_invalid("sgd: momentum must lie in [0, 1)");
  if (!(state.learning_rate > 0)) throw_invalid("sgd: learning rate must be positive");
  auto params = net.parameters();
  if (state.velocity.size() != params.size()) throw_invalid("sgd: momentum buffers do not mirror the parameters");

  std::vector<Tensor<T>> grads;
  grads.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = *params[i].param;
    if (p.grad.shape() != p.value.shape() || state.velocity[i].shape() != p.value.shape()) {
      throw_invalid("sgd: gradient/momentum shape mismatch for " + p.name);
    }
    grads.push_back(regularized_gradient(params[i], hyper));
    if (!grads.back().all_finite()) throw_numerical("sgd: non-finite gradient for " + p.name + "; step aborted");
  }
  const T gamma = static_cast<T>(hyper.momentum);
  const T eta = static_cast<T>(state.learning_rate);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& v = state.velocity[i];
    auto& w = params[i].param->value;
    const auto& g = grads[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = gamma * v[k] + eta * g[k];
      w[k] -= v[k];
    }
  }
}

void LrScheduleConfig::validate() const {
  if (patience < 1) throw_invalid("lr schedule: patience must be at least 1");
  if (!(factor > 0 && factor < 1)) throw_invalid("lr schedule: drop factor must lie in (0, 1)");
  if (threshold < 0) throw_invalid("lr schedule: threshold must be non-negative");
}

LrScheduler::LrScheduler(LrScheduleConfig config) : config_(config) { config_.validate(); }

LrDecision LrScheduler::observe(double loss, double learning_rate) {
  LrDecision d{learning_rate};
  if (!has_best_ || best_ - loss > config_.threshold * std::abs(best_)) {
    best_ = loss;
    has_best_ = true;
    stale_ = 0;
    return d;
  }
  if (++stale_ < config_.patience) return d;
  stale_ = 0;
  if (drops_ >= config_.max_drops) {
    d.stop = true;
    return d;
  }
  ++drops_;
  d.learning_rate = learning_rate * config_.factor;
  d.dropped = true;
  return d;
}

double lr_schedule_update(std::span<const double> history, double learning_rate, const LrScheduleConfig& config) {
  LrScheduler sched(config);
  LrDecision last{learning_rate};
  for (double loss : history) last = sched.observe(loss, learning_rate);
  return last.dropped ? last.learning_rate : learning_rate;
}

template TrainState<float> make_train_state(const Network<float>&, double);
template TrainState<double> make_train_state(const Network<double>&, double);
template Tensor<float> regularized_gradient(const ParamRef<float>&, const Hyperparams&);
template Tensor<double> regularized_gradient(const ParamRef<double>&, const Hyperparams&);
template void sgd_momentum_step(Network<float>&, TrainState<float>&, const Hyperparams&);
template void sgd_momentum_step(Network<double>&, TrainState<double>&, const Hyperparams&);

}  // namespace drh

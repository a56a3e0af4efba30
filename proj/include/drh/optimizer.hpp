// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drh/data.hpp"
#include "drh/losses.hpp"
#include "drh/model.hpp"

namespace drh {

/// Momentum buffers mirror the network's parameter list.
template <typename T>
struct TrainState {
  std::vector<Tensor<T>> velocity;
  double learning_rate = 1e-2;
  std::size_t epoch = 0;
  std::vector<double> loss_history;  // per-epoch mean composite loss
};

template <typename T>
TrainState<T> make_train_state(const Network<T>& net, double learning_rate);

/// Full gradient of J for one parameter: backprop term + lambda_o dR_O (hash weight) + lambda_w theta (decayed).
template <typename T>
Tensor<T> regularized_gradient(const ParamRef<T>& p, const Hyperparams& hyper);

/// v <- gamma v + eta (dJ/dW + lambda_o dR_O/dW + lambda_w dR_W/dW);  W <- W - v.
/// All gradients are validated before any parameter changes.
template <typename T>
void sgd_momentum_step(Network<T>& net, TrainState<T>& state, const Hyperparams& hyper);

struct LrScheduleConfig {
  std::size_t patience = 5;
  double threshold = 1e-3;  // relative improvement over the best epoch loss
  std::size_t max_drops = 3;
  double factor = 0.1;

  void validate() const;
};

struct LrDecision {
  double learning_rate;
  bool dropped = false;
  bool stop = false;  // stalled again after the last permitted drop
};

/// Multiplicative drop on stalls: when the best loss has not improved by `threshold`
/// (relative) for `patience` epochs, eta <- factor * eta, up to `max_drops` times.
class LrScheduler {
 public:
  explicit LrScheduler(LrScheduleConfig config = {});
  LrDecision observe(double epoch_loss, double learning_rate);
  std::size_t drops() const { return drops_; }

 private:
  LrScheduleConfig config_;
  double best_ = 0;
  bool has_best_ = false;
  std::size_t stale_ = 0;
  std::size_t drops_ = 0;
};

/// Replays the scheduler over `history` and returns the rate to use after its last entry.
double lr_schedule_update(std::span<const double> history, double learning_rate, const LrScheduleConfig& config = {});

struct TrainConfig {
  std::size_t max_epochs = 60;
  LrScheduleConfig schedule;
  std::uint64_t seed = 1;
  bool deterministic = true;
  bool augment = false;
  bool verbose = false;
};

struct EpochLog {
  std::size_t epoch = 0;
  double learning_rate = 0;
  double j = 0, j_s = 0, j_q = 0, j_b = 0, r_o = 0, r_w = 0;
  std::size_t skipped_batches = 0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::size_t skipped_batches = 0;
  bool stopped_by_schedule = false;
  LrScheduleConfig schedule;

  /// epoch,lr,J,J_S,J_Q,J_B,R_O,R_W,skipped_batches (+ a comment line with the schedule rule).
  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

/// Mini-batch SGD with momentum over the `items` of `data` (uniform shuffle each epoch).
TrainLog train(Network<float>& net, const Dataset& data, std::span<const std::size_t> items, const Hyperparams& hyper,
               const TrainConfig& config);

/// Eval-mode activations for the given items, in batches.
template <typename T>
Tensor<T> encode_items(Network<T>& net, const Dataset& data, std::span<const std::size_t> items,
                       std::size_t batch_size = 128);

}  // namespace drh

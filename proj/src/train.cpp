// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "drh/optimizer.hpp"
#include "drh/random.hpp"

namespace drh {

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out.precision(9);
  out << "# lr schedule: x" << schedule.factor << " after " << schedule.patience << " epochs without "
      << schedule.threshold << " relative improvement, at most " << schedule.max_drops << " drops\n";
  out << "epoch,lr,J,J_S,J_Q,J_B,R_O,R_W,skipped_batches\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.learning_rate << ',' << e.j << ',' << e.j_s << ',' << e.j_q << ',' << e.j_b << ','
        << e.r_o << ',' << e.r_w << ',' << e.skipped_batches << '\n';
  }
  return out.str();
}

void TrainLog::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_data("cannot write '" + path + "'");
  out << to_csv();
}

namespace {

bool all_same_labels(const Dataset& data, std::span<const std::size_t> batch) {
  for (std::size_t k = 1; k < batch.size(); ++k) {
    if (data.labels[batch[k]] != data.labels[batch[0]]) return false;
  }
  return true;
}

constexpr std::size_t kMaxConsecutiveFailures = 3;

}  // namespace

TrainLog train(Network<float>& net, const Dataset& data, std::span<const std::size_t> items, const Hyperparams& hyper,
               const TrainConfig& config) {
  hyper.validate();
  config.schedule.validate();
  if (items.size() < 2) throw_invalid("train: need at least two training items");
  for (auto i : items) {
    if (i >= data.size()) throw_invalid("train: item " + std::to_string(i) + " is outside the dataset");
  }

  TrainState<float> state = make_train_state(net, hyper.learning_rate);
  LrScheduler scheduler(config.schedule);
  TrainLog log;
  log.schedule = config.schedule;
  std::vector<std::size_t> order(items.begin(), items.end());
  std::size_t consecutive_failures = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const std::uint64_t epoch_seed = mix_seed(config.seed, epoch);
    std::mt19937_64 rng(epoch_seed);
    std::shuffle(order.begin(), order.end(), rng);

    EpochLog e;
    e.epoch = epoch;
    e.learning_rate = state.learning_rate;
    std::size_t used = 0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += hyper.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      if (end - start < 2) continue;
      std::span<const std::size_t> batch(order.data() + start, end - start);
      if (all_same_labels(data, batch)) {
        ++e.skipped_batches;
        continue;
      }
      try {
        const auto x = make_batch<float>(
            data, batch, config.augment ? std::optional<std::uint64_t>(mix_seed(epoch_seed, b)) : std::nullopt);
        const auto s = similarity_for(data, batch);
        const auto h = forward_hash(net, x, Mode::kTrain);
        const auto report = composite_loss(h, s, net, hyper);
        backward_hash(net, report.grad_h);
        sgd_momentum_step(net, state, hyper);
        e.j += report.total;
        e.j_s += report.j_s;
        e.j_q += report.j_q;
        e.j_b += report.j_b;
        e.r_o += report.r_o;
        e.r_w += report.r_w;
        ++used;
        consecutive_failures = 0;
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::kNumerical) throw;
        ++e.skipped_batches;
        if (++consecutive_failures >= kMaxConsecutiveFailures) {
          throw_numerical("train: " + std::to_string(consecutive_failures) +
                          " consecutive batches with non-finite values (epoch " + std::to_string(epoch) +
                          "): " + err.what());
        }
      }
    }
    if (used > 0) {
      const double inv = 1.0 / static_cast<double>(used);
      e.j *= inv;
      e.j_s *= inv;
      e.j_q *= inv;
      e.j_b *= inv;
      e.r_o *= inv;
      e.r_w *= inv;
    }
    log.skipped_batches += e.skipped_batches;
    log.epochs.push_back(e);
    state.loss_history.push_back(e.j);
    ++state.epoch;
    if (config.verbose) {
      std::fprintf(stderr, "epoch %3zu  lr %.1e  J %.5f  J_S %.5f  J_Q %.3f  J_B %.4f  R_O %.4f\n", epoch,
                   e.learning_rate, e.j, e.j_s, e.j_q, e.j_b, e.r_o);
    }
    if (used == 0) continue;
    const auto decision = scheduler.observe(e.j, state.learning_rate);
    if (decision.stop) {
      log.stopped_by_schedule = true;
      break;
    }
    state.learning_rate = decision.learning_rate;
  }
  return log;
}

template <typename T>
Tensor<T> encode_items(Network<T>& net, const Dataset& data, std::span<const std::size_t> items, std::size_t batch_size) {
  if (batch_size == 0) throw_invalid("encode: batch size must be positive");
  const std::size_t K = net.config.bits;
  Tensor<T> out(Shape{items.size(), K});
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    const std::size_t end = std::min(items.size(), start + batch_size);
    const auto x = make_batch<T>(data, items.subspan(start, end - start));
    const auto h = forward_hash(net, x, Mode::kEval);
    std::copy(h.ptr(), h.ptr() + h.size(), out.ptr() + start * K);
  }
  return out;
}

template Tensor<float> encode_items(Network<float>&, const Dataset&, std::span<const std::size_t>, std::size_t);
template Tensor<double> encode_items(Network<double>&, const Dataset&, std::span<const std::size_t>, std::size_t);

}  // namespace drh

// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include "drh/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "drh/layers.hpp"
#include "drh/losses.hpp"
#include "drh/model.hpp"
#include "drh/optimizer.hpp"
#include "drh/random.hpp"

namespace drh {

bool GradcheckReport::passed() const {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(), [&](const GradcheckEntry& e) {
           return e.checked > 0 && e.max_rel_error < tolerance;
         });
}

double GradcheckReport::worst() const {
  double w = 0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_error);
  return w;
}

std::string GradcheckReport::to_text(bool timing) const {
  std::ostringstream out;
  char line[160];
  for (const auto& e : entries) {
    std::snprintf(line, sizeof line, "%-28s max_rel_err %.3e  checked %7zu  kink_skips %zu  %s\n", e.name.c_str(),
                  e.max_rel_error, e.checked, e.skipped_kinks, e.max_rel_error < tolerance ? "ok" : "FAIL");
    out << line;
  }
  std::snprintf(line, sizeof line, "worst %.3e (tolerance %.0e)", worst(), tolerance);
  out << line;
  if (timing) {
    std::snprintf(line, sizeof line, " in %.1f s", seconds);
    out << line;
  }
  out << ": " << (passed() ? "PASS" : "FAIL") << '\n';
  return out.str();
}

namespace {

using Clock = std::chrono::steady_clock;
using T = double;

class Checker {
 public:
  explicit Checker(const GradcheckOptions& o) : opt_(o) {}

  /// Compares analytic[i] with the central difference of f in x[i] for the chosen entries.
  /// When `crossed` is given it reports whether the last f() left the smooth piece containing x
  /// (a ReLU or sign kink); such probes are retried with smaller steps, then skipped.
  void compare(const std::string& name, std::span<T> x, std::span<const T> analytic, const std::function<T()>& f,
               const std::vector<std::size_t>& indices, const std::function<bool()>& crossed = {}) {
    auto& e = entry(name);
    for (auto i : indices) {
      std::optional<T> numeric;
      T h = opt_.step;
      for (int attempt = 0; attempt < 3 && !numeric; ++attempt, h /= 10) numeric = central(x, i, h, f, crossed);
      if (!numeric) {
        ++e.skipped_kinks;
        continue;
      }
      const T a = analytic[i];
      const T n = *numeric;
      const T err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), opt_.floor});
      e.max_rel_error = std::max(e.max_rel_error, err);
      ++e.checked;
    }
  }

  void compare_all(const std::string& name, std::span<T> x, std::span<const T> analytic, const std::function<T()>& f) {
    std::vector<std::size_t> idx(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    compare(name, x, analytic, f, idx);
  }

  GradcheckEntry& entry(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      it = index_.emplace(name, entries_.size()).first;
      entries_.push_back({name});
    }
    return entries_[it->second];
  }

  std::vector<GradcheckEntry> take() { return std::move(entries_); }

 private:
  // Ridders' extrapolation of central differences: shrinks the step geometrically and keeps
  // the tableau entry with the smallest error estimate.
  static std::optional<T> central(std::span<T> x, std::size_t i, T h, const std::function<T()>& f,
                                  const std::function<bool()>& crossed) {
    constexpr int kTable = 10;
    constexpr T kShrink = 1.4, kShrink2 = kShrink * kShrink, kSafe = 2;
    const T saved = x[i];
    bool kink = false;
    auto diff = [&](T step) {
      x[i] = saved + step;
      const T plus = f();
      kink = kink || (crossed && crossed());
      x[i] = saved - step;
      const T minus = f();
      kink = kink || (crossed && crossed());
      return (plus - minus) / (2 * step);
    };
    T a[kTable][kTable];
    T best = 0, err = std::numeric_limits<T>::max();
    a[0][0] = diff(h);
    for (int k = 1; k < kTable; ++k) {
      h /= kShrink;
      a[0][k] = diff(h);
      T fac = kShrink2;
      for (int j = 1; j <= k; ++j) {
        a[j][k] = (a[j - 1][k] * fac - a[j - 1][k - 1]) / (fac - 1);
        fac *= kShrink2;
        const T e = std::max(std::abs(a[j][k] - a[j - 1][k]), std::abs(a[j][k] - a[j - 1][k - 1]));
        if (e <= err) {
          err = e;
          best = a[j][k];
        }
      }
      if (std::abs(a[k][k] - a[k - 1][k - 1]) >= kSafe * err) break;
    }
    x[i] = saved;
    if (kink) return std::nullopt;
    return best;
  }

  GradcheckOptions opt_;
  std::vector<GradcheckEntry> entries_;
  std::map<std::string, std::size_t> index_;
};

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  T normal() { return std::normal_distribution<T>(0, 1)(engine); }
  T uniform(T lo, T hi) { return std::uniform_real_distribution<T>(lo, hi)(engine); }
  Tensor<T> normal(const Shape& shape) {
    Tensor<T> t(shape);
    for (auto& v : t.values()) v = normal();
    return t;
  }
  void fill(Tensor<T>& t, T scale = 1) {
    for (auto& v : t.values()) v = scale * normal();
  }
};

T dot(const Tensor<T>& a, const Tensor<T>& b) {
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Checks one single-input layer under the objective sum(r * forward(x)).
template <typename Layer>
void check_layer(Checker& c, const std::string& name, Layer& layer, std::vector<Param<T>*> params, Tensor<T> x,
                 Rng& rng) {
  auto fwd = layer_forward(layer, x, Mode::kTrain);
  const Tensor<T> r = rng.normal(fwd.output.shape());
  const auto back = layer_backward(layer, fwd.cache, r);
  auto objective = [&] { return dot(layer_forward(layer, x, Mode::kTrain).output, r); };
  c.compare_all(name + " d/input", x.values(), back.grad_input.values(), objective);
  for (std::size_t p = 0; p < params.size(); ++p) {
    c.compare_all(name + " d/" + params[p]->name.substr(params[p]->name.rfind('.') + 1), params[p]->value.values(),
                  back.param_grads.at(p).values(), objective);
  }
}

void check_layers(Checker& c, Rng& rng) {
  {
    Conv2D<T> conv("conv3x3", 2, 3, 3, 1, 1, true);
    rng.fill(conv.weight.value, 0.5);
    rng.fill(conv.bias.value);
    check_layer(c, "conv3x3/s1", conv, {&conv.weight, &conv.bias}, rng.normal({2, 2, 5, 5}), rng);
  }
  {
    Conv2D<T> conv("conv3x3s2", 2, 3, 3, 2, 1, false);
    rng.fill(conv.weight.value, 0.5);
    check_layer(c, "conv3x3/s2", conv, {&conv.weight}, rng.normal({2, 2, 6, 6}), rng);
  }
  {
    Conv2D<T> conv("proj", 3, 4, 1, 2, 0, false);
    rng.fill(conv.weight.value, 0.5);
    check_layer(c, "conv1x1/s2", conv, {&conv.weight}, rng.normal({2, 3, 6, 6}), rng);
  }
  {
    BatchNorm<T> bn("bn", 3);
    for (auto& g : bn.gamma.value.values()) g = rng.uniform(0.5, 1.5);
    rng.fill(bn.beta.value);
    check_layer(c, "batchnorm", bn, {&bn.gamma, &bn.beta}, rng.normal({4, 3, 3, 3}), rng);
  }
  {
    ReLU relu;
    auto x = rng.normal({2, 3, 4, 4});
    for (auto& v : x.values()) {
      if (std::abs(v) < 0.05) v = v < 0 ? -0.05 : 0.05;  // keep probes off the kink
    }
    check_layer(c, "relu", relu, {}, x, rng);
  }
  {
    Tanh tanh;
    check_layer(c, "tanh", tanh, {}, rng.normal({3, 5}), rng);
  }
  {
    GlobalAvgPool pool;
    check_layer(c, "global_avg_pool", pool, {}, rng.normal({2, 3, 4, 4}), rng);
  }
  {
    FullyConnected<T> fc("fc", 7, 5);
    rng.fill(fc.weight.value, 0.5);
    rng.fill(fc.bias.value);
    check_layer(c, "fully_connected", fc, {&fc.weight, &fc.bias}, rng.normal({3, 7}), rng);
  }
  {
    ResidualAdd add;
    Tensor<T> a = rng.normal({2, 3, 3, 3}), b = rng.normal({2, 3, 3, 3});
    const auto fwd = layer_forward(add, a, b, Mode::kTrain);
    const Tensor<T> r = rng.normal(fwd.output.shape());
    const auto back = layer_backward(add, fwd.cache, r);
    auto objective = [&] { return dot(layer_forward(add, a, b, Mode::kTrain).output, r); };
    c.compare_all("residual_add d/main", a.values(), back.grad_input.values(), objective);
    c.compare_all("residual_add d/shortcut", b.values(), back.grad_input.values(), objective);
  }
}

SimilarityMatrix random_similarity(std::size_t n, Rng& rng) {
  SimilarityMatrix s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = 1;
    for (std::size_t j = i + 1; j < n; ++j) s(i, j) = s(j, i) = rng.uniform(0, 1) < 0.4 ? 1 : 0;
  }
  return s;
}

Tensor<T> random_activations(std::size_t n, std::size_t k, Rng& rng) {
  Tensor<T> h({n, k});
  for (auto& v : h.values()) {
    v = rng.uniform(0.02, 0.98);  // |h| away from 0, where the quantization gradient jumps
    if (rng.uniform(0, 1) < 0.5) v = -v;
  }
  return h;
}

void check_losses(Checker& c, Rng& rng) {
  const std::size_t n = 6, k = 8;
  Tensor<T> h = random_activations(n, k, rng);
  const auto s = random_similarity(n, rng);

  const auto js = retrieval_loss(h, s);
  c.compare_all("loss J_S", h.values(), js.grad.values(), [&] { return retrieval_loss(h, s).value; });
  const auto jq = quantization_loss(h);
  c.compare_all("loss J_Q", h.values(), jq.grad.values(), [&] { return quantization_loss(h).value; });
  const auto jb = bit_balance_loss(h);
  c.compare_all("loss J_B", h.values(), jb.grad.values(), [&] { return bit_balance_loss(h).value; });

  Tensor<T> w = rng.normal({k, 12});
  for (auto& v : w.values()) v *= 0.3;
  const auto ro = orthogonality_reg(w);
  c.compare_all("reg R_O", w.values(), ro.grad.values(), [&] { return orthogonality_reg(w).value; });

  Hyperparams hyper;
  const T decay = 3.7;
  const auto rep = composite_loss(h, s, w, decay, hyper);
  Tensor<T> grad_w = rep.grad_hash_weight;
  for (auto& v : grad_w.values()) v *= hyper.lambda_o;
  auto total = [&] { return composite_loss(h, s, w, decay, hyper).total; };
  c.compare_all("composite J d/H", h.values(), rep.grad_h.values(), total);
  c.compare_all("composite J d/W_h", w.values(), grad_w.values(), total);
}

// Which side of every kink the current train-mode pass sits on: each ReLU input's sign
// and each activation's sign (the quantization loss has a kink at h = 0).
std::vector<bool> kink_pattern(const Network<T>& net, const Tensor<T>& h) {
  std::vector<bool> p;
  auto add = [&](const Tensor<T>& t) {
    for (auto v : t.values()) p.push_back(v > 0);
  };
  add(net.cache.stem_relu.saved);
  for (const auto& b : net.blocks) {
    add(b.cache.relu1.saved);
    add(b.cache.relu_out.saved);
  }
  add(h);
  return p;
}

void check_network(Checker& c, Rng& rng, const GradcheckOptions& opt, bool residual) {
  NetworkConfig cfg;
  cfg.in_height = cfg.in_width = kMinInputExtent;
  cfg.stage_widths = {3, 4, 4, 5};
  cfg.block_counts = {1, 1, 1, 1};
  cfg.bits = 6;
  cfg.seed = rng.engine();
  cfg.residual = residual;
  auto net = build_network<T>(cfg);
  // Non-trivial affine parameters so every path carries gradient.
  for (auto ref : net.parameters()) {
    if (ref.param->name.ends_with(".gamma")) {
      for (auto& v : ref.param->value.values()) v = rng.uniform(0.5, 1.5);
    } else if (ref.param->name.ends_with(".beta") || ref.param->name.ends_with(".bias")) {
      for (auto& v : ref.param->value.values()) v = 0.3 * rng.normal();
    }
  }
  const std::size_t n = 5;
  const Tensor<T> x = rng.normal({n, 1, cfg.in_height, cfg.in_width});
  const auto s = random_similarity(n, rng);
  Hyperparams hyper;

  auto h = forward_hash(net, x, Mode::kTrain);
  const auto rep = composite_loss(h, s, net, hyper);
  backward_hash(net, rep.grad_h);
  const auto base_pattern = kink_pattern(net, h);
  bool left_piece = false;
  auto objective = [&] {
    const auto hp = forward_hash(net, x, Mode::kTrain);
    left_piece = kink_pattern(net, hp) != base_pattern;
    return composite_loss(hp, s, net, hyper).total;
  };
  auto crossed = [&] { return left_piece; };

  const std::string prefix = residual ? "network drh J d/theta" : "network dph J d/theta";
  for (auto ref : net.parameters()) {
    const Tensor<T> analytic = regularized_gradient(ref, hyper);
    const std::size_t size = ref.param->value.size();
    std::vector<std::size_t> idx;
    if (size <= opt.samples_per_tensor) {
      for (std::size_t i = 0; i < size; ++i) idx.push_back(i);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, size - 1);
      for (std::size_t i = 0; i < opt.samples_per_tensor; ++i) idx.push_back(pick(rng.engine));
    }
    c.compare(prefix, ref.param->value.values(), analytic.values(), objective, idx, crossed);
  }
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
  if (!(opt.step > 0) || !(opt.floor > 0) || opt.trials == 0) throw_invalid("gradcheck: invalid options");
  const auto start = Clock::now();
  Checker checker(opt);
  for (std::size_t t = 0; t < opt.trials; ++t) {
    Rng rng(mix_seed(opt.seed, t));
    check_layers(checker, rng);
    check_losses(checker, rng);
  }
  for (std::size_t t = 0; t < opt.network_trials; ++t) {
    Rng rng(mix_seed(opt.seed ^ 0x6e6574, t));
    check_network(checker, rng, opt, true);
    check_network(checker, rng, opt, false);
  }
  GradcheckReport report;
  report.entries = checker.take();
  report.tolerance = opt.tolerance;
  report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

}  // namespace drh

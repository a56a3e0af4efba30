// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include "drh/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace drh {

void SimilarityMatrix::validate() const {
  if (s.size() != n * n) throw_invalid("similarity matrix: buffer does not hold n*n entries");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto v = (*this)(i, j);
      if (v > 1) throw_invalid("similarity matrix: entries must be 0 or 1");
      if (v != (*this)(j, i)) throw_invalid("similarity matrix: not symmetric");
    }
  }
}

void Hyperparams::validate() const {
  if (lambda_q < 0 || lambda_b < 0 || lambda_o < 0 || lambda_w < 0) {
    throw_invalid("hyperparameters: loss weights must be non-negative");
  }
  if (!(momentum >= 0 && momentum < 1)) throw_invalid("hyperparameters: momentum must lie in [0, 1)");
  if (!(learning_rate > 0)) throw_invalid("hyperparameters: learning rate must be positive");
  if (batch_size < 2) throw_invalid("hyperparameters: batch size must be at least 2");
}

double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

namespace {

template <typename T>
void require_matrix(const char* what, const Tensor<T>& h) {
  if (h.rank() != 2) throw_invalid(std::string(what) + ": expected an N x K matrix, got " + shape_string(h.shape()));
}

template <typename T>
std::vector<double> squared_distances(const Tensor<T>& h) {
  const std::size_t N = h.dim(0), K = h.dim(1);
  std::vector<double> d(N * N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < K; ++k) {
        const double diff = static_cast<double>(h.at(i, k)) - static_cast<double>(h.at(j, k));
        acc += diff * diff;
      }
      d[i * N + j] = d[j * N + i] = acc;
    }
  }
  return d;
}

// Row-wise softmax of -D over j != i, in double.
// Row-wise softmax over j != i. With z set, also returns each row's normaliser of the shifted exponentials.
std::vector<double> softmax_rows(const std::vector<double>& d, std::size_t N, std::vector<double>* z_out = nullptr) {
  std::vector<double> p(N * N, 0.0);
  if (z_out) z_out->assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N; ++j)
      if (j != i) dmin = std::min(dmin, d[i * N + j]);
    double z = 0;
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i) continue;
      p[i * N + j] = std::exp(-(d[i * N + j] - dmin));
      z += p[i * N + j];
    }
    if (z_out) (*z_out)[i] = z;
    for (std::size_t j = 0; j < N; ++j) p[i * N + j] /= z;
  }
  return p;
}

}  // namespace

template <typename T>
Tensor<T> neighbor_probabilities(const Tensor<T>& h) {
  require_matrix("neighbor_probabilities", h);
  const std::size_t N = h.dim(0);
  if (N < 2) throw_invalid("neighbor_probabilities: need at least 2 rows, got " + std::to_string(N));
  const auto p = softmax_rows(squared_distances(h), N);
  Tensor<T> out(Shape{N, N});
  for (std::size_t i = 0; i < N * N; ++i) out[i] = static_cast<T>(p[i]);
  return out;
}

template <typename T>
LossTerm<T> retrieval_loss(const Tensor<T>& h, const SimilarityMatrix& s, std::size_t* rows_without_neighbor) {
  require_matrix("retrieval_loss", h);
  const std::size_t N = h.dim(0), K = h.dim(1);
  if (N < 2) throw_invalid("retrieval_loss: need at least 2 rows, got " + std::to_string(N));
  if (s.n != N || s.s.size() != N * N) {
    throw_invalid("retrieval_loss: similarity matrix is " + std::to_string(s.n) + "x" + std::to_string(s.n) +
                  " for a batch of " + std::to_string(N));
  }
  const auto d = squared_distances(h);
  std::vector<double> z;
  const auto p = softmax_rows(d, N, &z);
  const double inv_n = 1.0 / static_cast<double>(N);

  // The value sums the mass on dissimilar pairs, 1 - a_i, re-accumulated in the normaliser's own
  // order so that the all-similar and none-similar batches give exactly 0 and 1.
  std::vector<double> a(N, 0.0);
  std::size_t lonely = 0;
  double miss = 0;
  for (std::size_t i = 0; i < N; ++i) {
    bool any = false;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N; ++j)
      if (j != i) dmin = std::min(dmin, d[i * N + j]);
    double off = 0;
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i) continue;
      if (s(i, j)) {
        any = true;
        a[i] += p[i * N + j];
      } else {
        off += std::exp(-(d[i * N + j] - dmin));
      }
    }
    if (!any) ++lonely;
    miss += off / z[i];
  }
  if (rows_without_neighbor) *rows_without_neighbor = lonely;

  // dJ/dD_ij (row i's softmax) = p_ij (s_ij - a_i) / N; symmetrise and chain through D_ij = |h_i - h_j|^2.
  std::vector<double> g(N * N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i) continue;
      const double sij = s(i, j) ? 1.0 : 0.0;
      g[i * N + j] = p[i * N + j] * (sij - a[i]) * inv_n;
    }
  }
  LossTerm<T> out;
  out.value = static_cast<T>(miss / static_cast<double>(N));
  out.grad = Tensor<T>(Shape{N, K});
  std::vector<double> row(K);
  for (std::size_t i = 0; i < N; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i) continue;
      const double m = g[i * N + j] + g[j * N + i];
      if (m == 0.0) continue;
      for (std::size_t k = 0; k < K; ++k) {
        row[k] += 2.0 * m * (static_cast<double>(h.at(i, k)) - static_cast<double>(h.at(j, k)));
      }
    }
    for (std::size_t k = 0; k < K; ++k) out.grad.at(i, k) = static_cast<T>(row[k]);
  }
  return out;
}

template <typename T>
LossTerm<T> quantization_loss(const Tensor<T>& h) {
  require_matrix("quantization_loss", h);
  LossTerm<T> out;
  out.grad = Tensor<T>(h.shape());
  double sum = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double v = h[i];
    const double dev = std::abs(v) - 1.0;
    sum += log_cosh(dev);
    const double sgn = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
    out.grad[i] = static_cast<T>(std::tanh(dev) * sgn);
  }
  out.value = static_cast<T>(sum);
  return out;
}

template <typename T>
LossTerm<T> bit_balance_loss(const Tensor<T>& h) {
  require_matrix("bit_balance_loss", h);
  const std::size_t N = h.dim(0);
  if (N == 0) throw_invalid("bit_balance_loss: empty batch");
  const double inv_n = 1.0 / static_cast<double>(N);
  LossTerm<T> out;
  out.grad = Tensor<T>(h.shape());
  double trace = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double v = h[i];
    trace += v * v;
    out.grad[i] = static_cast<T>(-v * inv_n);
  }
  out.value = static_cast<T>(-0.5 * inv_n * trace);
  return out;
}

template <typename T>
LossTerm<T> orthogonality_reg(const Tensor<T>& w) {
  require_matrix("orthogonality_reg", w);
  const std::size_t K = w.dim(0), D = w.dim(1);
  std::vector<double> a(K * K);
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      double acc = 0;
      for (std::size_t d = 0; d < D; ++d) acc += static_cast<double>(w.at(i, d)) * w.at(j, d);
      a[i * K + j] = acc - (i == j ? 1.0 : 0.0);
    }
  }
  double frob = 0;
  for (double v : a) frob += v * v;
  LossTerm<T> out;
  out.value = static_cast<T>(0.5 * frob);
  out.grad = Tensor<T>(w.shape());
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t d = 0; d < D; ++d) {
      double acc = 0;
      for (std::size_t j = 0; j < K; ++j) acc += a[i * K + j] * w.at(j, d);
      out.grad.at(i, d) = static_cast<T>(2.0 * acc);
    }
  }
  return out;
}

template <typename T>
T weight_decay_value(const Network<T>& net) {
  double acc = 0;
  for (const auto* p : net.parameters()) {
    if (!p->decay) continue;
    for (T v : p->value.values()) acc += static_cast<double>(v) * v;
  }
  return static_cast<T>(0.5 * acc);
}

template <typename T>
LossReport<T> composite_loss(const Tensor<T>& h, const SimilarityMatrix& s, const Tensor<T>& hash_weight,
                             T weight_decay, const Hyperparams& hyper) {
  hyper.validate();
  LossReport<T> r;
  auto js = retrieval_loss(h, s, &r.rows_without_neighbor);
  auto jq = quantization_loss(h);
  auto jb = bit_balance_loss(h);
  auto ro = orthogonality_reg(hash_weight);
  r.j_s = js.value;
  // J_Q enters the composite as a per-item mean, on the same 1/N footing as J_S and J_B.
  const T inv_n = T(1) / static_cast<T>(h.dim(0));
  r.j_q = jq.value * inv_n;
  r.j_b = jb.value;
  r.r_o = ro.value;
  r.r_w = weight_decay;
  const double total = static_cast<double>(r.j_s) + hyper.lambda_q * r.j_q + hyper.lambda_b * r.j_b +
                       hyper.lambda_o * r.r_o + hyper.lambda_w * r.r_w;
  r.total = static_cast<T>(total);
  r.grad_h = std::move(js.grad);
  const T lq = static_cast<T>(hyper.lambda_q) * inv_n, lb = static_cast<T>(hyper.lambda_b);
  if (lq != T(0) || lb != T(0)) {
    for (std::size_t i = 0; i < r.grad_h.size(); ++i) r.grad_h[i] += lq * jq.grad[i] + lb * jb.grad[i];
  }
  r.grad_hash_weight = std::move(ro.grad);
  if (!std::isfinite(r.total) || !r.grad_h.all_finite()) throw_numerical("composite loss: non-finite value");
  return r;
}

template <typename T>
LossReport<T> composite_loss(const Tensor<T>& h, const SimilarityMatrix& s, const Network<T>& net,
                             const Hyperparams& hyper) {
  return composite_loss(h, s, net.hash_fc.weight.value, weight_decay_value(net), hyper);
}

#define DRH_INSTANTIATE_LOSSES(T)                                                                          \
  template Tensor<T> neighbor_probabilities(const Tensor<T>&);                                             \
  template LossTerm<T> retrieval_loss(const Tensor<T>&, const SimilarityMatrix&, std::size_t*);            \
  template LossTerm<T> quantization_loss(const Tensor<T>&);                                                \
  template LossTerm<T> bit_balance_loss(const Tensor<T>&);                                                 \
  template LossTerm<T> orthogonality_reg(const Tensor<T>&);                                                \
  template T weight_decay_value(const Network<T>&);                                                        \
  template LossReport<T> composite_loss(const Tensor<T>&, const SimilarityMatrix&, const Tensor<T>&, T,    \
                                        const Hyperparams&);                                               \
  template LossReport<T> composite_loss(const Tensor<T>&, const SimilarityMatrix&, const Network<T>&,      \
                                        const Hyperparams&);

DRH_INSTANTIATE_LOSSES(float)
DRH_INSTANTIATE_LOSSES(double)

}  // namespace drh

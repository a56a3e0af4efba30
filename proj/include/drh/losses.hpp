// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <vector>

#include "drh/model.hpp"
#include "drh/tensor.hpp"

namespace drh {

/// Pairwise {0,1} relevance; s(i, j) = 1 when items i and j share a label.
/// The diagonal is stored but ignored by every loss and metric.
struct SimilarityMatrix {
  std::size_t n = 0;
  std::vector<std::uint8_t> s;

  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::size_t size, std::uint8_t fill = 0) : n(size), s(size * size, fill) {}
  std::uint8_t operator()(std::size_t i, std::size_t j) const { return s[i * n + j]; }
  std::uint8_t& operator()(std::size_t i, std::size_t j) { return s[i * n + j]; }

  /// Throws unless square, binary and symmetric.
  void validate() const;
};

/// Weights of the composite objective plus the SGD settings they are trained with.
struct Hyperparams {
  double lambda_q = 0.05;   // quantization
  double lambda_b = 0.025;  // bit balance
  double lambda_o = 0.01;   // orthogonality of W_h
  double lambda_w = 1e-4;   // weight decay
  double momentum = 0.9;
  double learning_rate = 1e-2;
  std::size_t batch_size = 64;

  void validate() const;
};

template <typename T>
struct LossTerm {
  T value = 0;
  Tensor<T> grad;  // same shape as the differentiated input
};

template <typename T>
struct LossReport {
  T j_s = 0, j_q = 0, j_b = 0, r_o = 0, r_w = 0;  // j_q is quantization_loss / N
  T total = 0;
  Tensor<T> grad_h;          // dJ/dH, N x K (hashing and retrieval terms only)
  Tensor<T> grad_hash_weight;  // dR_O/dW_h, K x D (unweighted)
  std::size_t rows_without_neighbor = 0;
};

/// p_ij = exp(-|h_i - h_j|^2) / sum_{l != i} exp(-|h_i - h_l|^2), p_ii = 0.
template <typename T>
Tensor<T> neighbor_probabilities(const Tensor<T>& h);

/// J_S = 1 - (1/N) sum_{i != j} p_ij s_ij, with its exact gradient w.r.t. H.
/// rows_without_neighbor (optional) counts rows of S with no similar partner in the batch.
template <typename T>
LossTerm<T> retrieval_loss(const Tensor<T>& h, const SimilarityMatrix& s, std::size_t* rows_without_neighbor = nullptr);

/// J_Q = sum log cosh(|h| - 1); dJ_Q/dh = tanh(|h| - 1) sign(h) with sign(0) = 0.
template <typename T>
LossTerm<T> quantization_loss(const Tensor<T>& h);

/// J_B = -tr(H H^T) / (2N); dJ_B/dh_i = -h_i / N.
template <typename T>
LossTerm<T> bit_balance_loss(const Tensor<T>& h);

/// R_O = 0.5 |W W^T - I|_F^2 for W viewed as K x D; gradient 2 (W W^T - I) W.
template <typename T>
LossTerm<T> orthogonality_reg(const Tensor<T>& w);

/// 0.5 * sum of squares over the decayed parameters (conv and fc weights).
template <typename T>
T weight_decay_value(const Network<T>& net);

/// J = J_S + lambda_q J_Q / N + lambda_b J_B + lambda_o R_O + lambda_w R_W, with dJ/dH for the first three.
template <typename T>
LossReport<T> composite_loss(const Tensor<T>& h, const SimilarityMatrix& s, const Tensor<T>& hash_weight,
                             T weight_decay, const Hyperparams& hyper);

template <typename T>
LossReport<T> composite_loss(const Tensor<T>& h, const SimilarityMatrix& s, const Network<T>& net,
                             const Hyperparams& hyper);

/// log cosh(x) without overflow for large |x|.
double log_cosh(double x);

}  // namespace drh

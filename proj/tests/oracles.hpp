// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
//
// Test-side reference computations. Nothing here calls the code it is used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "drh/tensor.hpp"

namespace oracle {

using drh::Tensor;

/// Five-point central difference in entry i; truncation error O(h^4).
inline double central_difference(std::span<double> x, std::size_t i, const std::function<double()>& f,
                                  double h = 1e-3) {
  const double saved = x[i];
  auto at = [&](double offset) {
    x[i] = saved + offset;
    return f();
  };
  const double d = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
  x[i] = saved;
  return d;
}

/// max over entries of |a - n| / max(|a|, |n|, floor) against central differences.
inline double max_rel_error(std::span<double> x, std::span<const double> analytic, const std::function<double()>& f,
                            double h = 1e-3, double floor = 1e-4) {
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = central_difference(x, i, f, h);
    const double a = analytic[i];
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
  }
  return worst;
}

inline Tensor<double> random_tensor(const drh::Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Tensor<double> t(shape);
  for (auto& v : t.values()) v = d(rng);
  return t;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Direct convolution straight from the definition (zero padding, square kernel).
inline Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& w, const double* bias, std::size_t stride,
                             std::size_t pad) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t o = w.dim(0), k = w.dim(2);
  const std::size_t oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
  Tensor<double> y({n, o, oh, ow});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t oc = 0; oc < o; ++oc)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double s = bias ? bias[oc] : 0.0;
          for (std::size_t ic = 0; ic < c; ++ic)
            for (std::size_t u = 0; u < k; ++u)
              for (std::size_t v = 0; v < k; ++v) {
                const long yy = static_cast<long>(i * stride + u) - static_cast<long>(pad);
                const long xx = static_cast<long>(j * stride + v) - static_cast<long>(pad);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(wd)) continue;
                s += x.at(b, ic, yy, xx) * w.at(oc, ic, u, v);
              }
          y.at(b, oc, i, j) = s;
        }
  return y;
}

/// AP written out from its definition, with relevance given per rank.
inline double average_precision(const std::vector<int>& relevant_by_rank) {
  double hits = 0, sum = 0;
  for (std::size_t r = 0; r < relevant_by_rank.size(); ++r) {
    if (relevant_by_rank[r]) {
      hits += 1;
      sum += hits / static_cast<double>(r + 1);
    }
  }
  return hits > 0 ? sum / hits : -1.0;
}

/// Hamming distance over unpacked +-1 codes.
inline std::uint32_t hamming(const std::vector<std::int8_t>& a, const std::vector<std::int8_t>& b) {
  std::uint32_t d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d += a[k] != b[k];
  return d;
}

inline std::vector<std::int8_t> random_code(std::size_t bits, std::mt19937_64& rng) {
  std::vector<std::int8_t> c(bits);
  for (auto& v : c) v = (rng() & 1) ? 1 : -1;
  return c;
}

}  // namespace oracle

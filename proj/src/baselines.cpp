// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include "drh/baselines.hpp"

#include <cmath>
#include <optional>
#include <random>

#include "drh/random.hpp"

namespace drh {

Matrix pixel_features(const Dataset& data, std::span<const std::size_t> items, std::size_t grid) {
  if (grid == 0 || grid > data.height || grid > data.width) {
    throw_invalid("features: grid " + std::to_string(grid) + " does not fit " + std::to_string(data.height) + "x" +
                  std::to_string(data.width) + " images");
  }
  Matrix out(Shape{items.size(), grid * grid});
  for (std::size_t r = 0; r < items.size(); ++r) {
    if (items[r] >= data.size()) throw_invalid("features: item " + std::to_string(items[r]) + " is outside the dataset");
    const auto img = data.image(items[r]);
    for (std::size_t gy = 0; gy < grid; ++gy) {
      const std::size_t y0 = gy * data.height / grid, y1 = (gy + 1) * data.height / grid;
      for (std::size_t gx = 0; gx < grid; ++gx) {
        const std::size_t x0 = gx * data.width / grid, x1 = (gx + 1) * data.width / grid;
        double sum = 0;
        for (std::size_t y = y0; y < y1; ++y) {
          for (std::size_t x = x0; x < x1; ++x) sum += img[y * data.width + x];
        }
        out.at(r, gy * grid + gx) = sum / (255.0 * static_cast<double>((y1 - y0) * (x1 - x0)));
      }
    }
  }
  return out;
}

Standardizer Standardizer::fit(const Matrix& f) {
  if (f.rank() != 2 || f.dim(0) < 2) throw_invalid("standardizer: need at least two feature rows");
  const std::size_t n = f.dim(0), d = f.dim(1);
  Standardizer s;
  s.mean.assign(d, 0);
  s.scale.assign(d, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += f.at(i, j);
  }
  for (auto& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = f.at(i, j) - s.mean[j];
      s.scale[j] += c * c;
    }
  }
  for (auto& v : s.scale) {
    const double sd = std::sqrt(v / static_cast<double>(n - 1));
    v = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& f) const {
  if (f.rank() != 2 || f.dim(1) != mean.size()) {
    throw_invalid("standardizer: expected " + std::to_string(mean.size()) + " columns, got " + shape_string(f.shape()));
  }
  Matrix out = f;
  for (std::size_t i = 0; i < f.dim(0); ++i) {
    for (std::size_t j = 0; j < f.dim(1); ++j) out.at(i, j) = (f.at(i, j) - mean[j]) * scale[j];
  }
  return out;
}

BinaryCodes sign_codes(const Matrix& projected) {
  BinaryCodes codes;
  codes.rows = projected.dim(0);
  codes.bits = projected.dim(1);
  codes.values.resize(projected.size());
  for (std::size_t i = 0; i < projected.size(); ++i) codes.values[i] = projected[i] >= 0 ? 1 : -1;
  return codes;
}

LshModel make_lsh(std::size_t bits, std::size_t dims, std::uint64_t seed) {
  if (bits == 0 || dims == 0) throw_invalid("lsh: code size and feature dimension must be positive");
  std::mt19937_64 rng(mix_seed(seed, bits));
  std::normal_distribution<double> normal(0.0, 1.0);
  LshModel m{Matrix(Shape{bits, dims})};
  for (double& x : m.projection.values()) x = normal(rng);
  return m;
}

BinaryCodes lsh_encode(const Matrix& features, const LshModel& model) {
  if (features.rank() != 2 || features.dim(1) != model.projection.dim(1)) {
    throw_invalid("lsh: features have shape " + shape_string(features.shape()) + ", model expects D = " +
                  std::to_string(model.projection.dim(1)));
  }
  return sign_codes(linalg::matmul(features, linalg::transpose(model.projection)));
}

namespace {

Matrix sign_matrix(const Matrix& a) {
  Matrix b(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) b[i] = a[i] >= 0 ? 1.0 : -1.0;
  return b;
}

double squared_distance(const Matrix& a, const Matrix& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

double itq_objective(const Matrix& v, const Matrix& rotation) {
  const Matrix vr = linalg::matmul(v, rotation);
  return squared_distance(sign_matrix(vr), vr);
}

ItqRefinement itq_refine(const Matrix& v, const Matrix& initial_rotation, std::size_t iterations) {
  if (v.rank() != 2 || initial_rotation.rank() != 2 || initial_rotation.dim(0) != v.dim(1) ||
      initial_rotation.dim(1) != v.dim(1)) {
    throw_invalid("itq: rotation must be K x K for V of shape " + shape_string(v.shape()));
  }
  ItqRefinement out;
  out.rotation = initial_rotation;
  const Matrix vt = linalg::transpose(v);
  for (std::size_t it = 0; it < iterations; ++it) {
    const Matrix b = sign_matrix(linalg::matmul(v, out.rotation));
    const auto svd = linalg::jacobi_svd(linalg::matmul(vt, b));
    out.rotation = linalg::matmul(svd.u, linalg::transpose(svd.v));
    out.objective.push_back(squared_distance(b, linalg::matmul(v, out.rotation)));
  }
  out.codes = sign_codes(linalg::matmul(v, out.rotation));
  return out;
}

ItqModel itq_train(const Matrix& features, std::size_t bits, std::size_t iterations, std::uint64_t seed,
                   std::size_t restarts) {
  if (features.rank() != 2) throw_invalid("itq: features must be N x D");
  if (restarts == 0) throw_invalid("itq: need at least one restart");
  const std::size_t n = features.dim(0), d = features.dim(1);
  if (bits == 0 || bits > d) throw_invalid("itq: code size must lie in [1, D]");
  if (n <= bits) throw_invalid("itq: need more samples than bits (N = " + std::to_string(n) + ")");
  if (!features.all_finite()) throw_numerical("itq: non-finite features");

  ItqModel m;
  m.mean.assign(d, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += features.at(i, j);
  }
  for (auto& x : m.mean) x /= static_cast<double>(n);
  Matrix centered = features;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centered.at(i, j) -= m.mean[j];
  }
  Matrix cov = linalg::matmul(linalg::transpose(centered), centered);
  for (double& x : cov.values()) x /= static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i) {  // exact symmetry for the eigensolver
    for (std::size_t j = i + 1; j < d; ++j) cov.at(j, i) = cov.at(i, j);
  }
  const auto eig = linalg::symmetric_eigen(cov);
  const double top = eig.values.empty() ? 0.0 : eig.values[0];
  std::size_t rank = 0;
  for (double ev : eig.values) rank += ev > 1e-10 * std::max(top, 1e-300) && top > 0;
  if (rank < bits) {
    throw_numerical("itq: covariance has rank " + std::to_string(rank) + ", fewer than the " + std::to_string(bits) +
                    " requested bits");
  }
  m.pca = Matrix(Shape{d, bits});
  for (std::size_t j = 0; j < bits; ++j) {
    m.eigenvalues.push_back(eig.values[j]);
    for (std::size_t k = 0; k < d; ++k) m.pca.at(k, j) = eig.vectors.at(k, j);
  }
  const Matrix v = linalg::matmul(centered, m.pca);
  std::optional<ItqRefinement> best;
  double best_objective = 0;
  for (std::size_t r = 0; r < restarts; ++r) {
    auto run = itq_refine(v, linalg::random_orthogonal(bits, mix_seed(mix_seed(seed, bits), r)), iterations);
    const double obj = itq_objective(v, run.rotation);
    if (!best || obj < best_objective) {
      best_objective = obj;
      best = std::move(run);
    }
  }
  auto& refined = *best;
  m.rotation = std::move(refined.rotation);
  m.objective = std::move(refined.objective);
  m.train_codes = std::move(refined.codes);
  return m;
}

Matrix itq_project(const Matrix& features, const ItqModel& model) {
  if (features.rank() != 2 || features.dim(1) != model.mean.size()) {
    throw_invalid("itq: features have shape " + shape_string(features.shape()) + ", model expects D = " +
                  std::to_string(model.mean.size()));
  }
  Matrix centered = features;
  for (std::size_t i = 0; i < features.dim(0); ++i) {
    for (std::size_t j = 0; j < features.dim(1); ++j) centered.at(i, j) -= model.mean[j];
  }
  return linalg::matmul(linalg::matmul(centered, model.pca), model.rotation);
}

BinaryCodes itq_encode(const Matrix& features, const ItqModel& model) { return sign_codes(itq_project(features, model)); }

}  // namespace drh

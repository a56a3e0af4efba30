// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "drh/data.hpp"
#include "drh/linalg.hpp"
#include "drh/model.hpp"

namespace drh {

using linalg::Matrix;

/// Block-averaged feature grid (16 x 16 by default), one row per item, pixel values in [0, 1].
inline constexpr std::size_t kFeatureGrid = 16;
Matrix pixel_features(const Dataset& data, std::span<const std::size_t> items, std::size_t grid = kFeatureGrid);

/// Per-dimension z-scoring fitted on one set and applied to others. Constant dimensions map to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
};

/// sign(.) with sign(0) := +1.
BinaryCodes sign_codes(const Matrix& projected);

struct LshModel {
  Matrix projection;  // K x D, standard normal
};

LshModel make_lsh(std::size_t bits, std::size_t dims, std::uint64_t seed);
BinaryCodes lsh_encode(const Matrix& features, const LshModel& model);

struct ItqModel {
  std::vector<double> mean;       // D
  Matrix pca;                     // D x K, top-K covariance eigenvectors
  std::vector<double> eigenvalues;  // the K retained ones, descending
  Matrix rotation;                // K x K orthogonal
  std::vector<double> objective;  // |B - V R|_F^2 after each iteration of the kept run
  BinaryCodes train_codes;        // sign(V R) for the final rotation
};

struct ItqRefinement {
  Matrix rotation;
  std::vector<double> objective;
  BinaryCodes codes;
};

/// |B - V R|_F^2 with B = sign(V R).
double itq_objective(const Matrix& v, const Matrix& rotation);

/// Alternating minimization from a given rotation: B = sign(V R), then R from the
/// orthogonal Procrustes problem (SVD of V^T B). One objective entry per iteration.
ItqRefinement itq_refine(const Matrix& v, const Matrix& initial_rotation, std::size_t iterations);

/// PCA to K dimensions, then itq_refine from `restarts` seeded random rotations; the run with
/// the lowest final objective is kept (small samples have many poor fixed points).
inline constexpr std::size_t kItqRestarts = 50;
ItqModel itq_train(const Matrix& features, std::size_t bits, std::size_t iterations = 50, std::uint64_t seed = 1,
                   std::size_t restarts = kItqRestarts);
Matrix itq_project(const Matrix& features, const ItqModel& model);  // (x - mean) W
BinaryCodes itq_encode(const Matrix& features, const ItqModel& model);

}  // namespace drh

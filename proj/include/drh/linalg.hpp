// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

#include <cstdint>

#include "drh/tensor.hpp"

// Small dense linear algebra for the baselines. Matrices are rank-2 Tensor<double>, row-major.
namespace drh::linalg {

using Matrix = Tensor<double>;

Matrix identity(std::size_t n);
Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
/// max |A^T A - I| over all entries.
double orthonormality_error(const Matrix& a);
double frobenius(const Matrix& a);

struct JacobiOptions {
  double tolerance = 1e-12;  // off-diagonal mass relative to the Frobenius norm
  std::size_t max_sweeps = 100;
};

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
  std::size_t sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen symmetric_eigen(const Matrix& a, const JacobiOptions& options = {});

struct Svd {
  Matrix u;  // n x n, orthogonal
  std::vector<double> s;
  Matrix v;  // n x n, orthogonal; A = U diag(s) V^T
  std::size_t sweeps = 0;
};

/// One-sided (Hestenes) Jacobi SVD of a square matrix. Singular values descend.
Svd jacobi_svd(const Matrix& a, const JacobiOptions& options = {});

/// Modified Gram-Schmidt on the columns; dependent columns are replaced by unit vectors
/// orthogonal to the previous ones.
Matrix orthonormalize_columns(const Matrix& a);

/// Orthogonal n x n matrix from orthonormalized standard-normal draws.
Matrix random_orthogonal(std::size_t n, std::uint64_t seed);

}  // namespace drh::linalg

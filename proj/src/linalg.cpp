// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include "drh/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace drh::linalg {

namespace {

void require_matrix(const Matrix& a, const char* what) {
  if (a.rank() != 2) throw_invalid(std::string(what) + ": expected a matrix, got " + shape_string(a.shape()));
}

void require_square(const Matrix& a, const char* what) {
  require_matrix(a, what);
  if (a.dim(0) != a.dim(1)) throw_invalid(std::string(what) + ": expected a square matrix, got " + shape_string(a.shape()));
}

}  // namespace

Matrix identity(std::size_t n) {
  Matrix m(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

Matrix transpose(const Matrix& a) {
  require_matrix(a, "transpose");
  Matrix t(Shape{a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i) {
    for (std::size_t j = 0; j < a.dim(1); ++j) t.at(j, i) = a.at(i, j);
  }
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw_invalid("matmul: inner extents differ (" + shape_string(a.shape()) + " x " + shape_string(b.shape()) + ")");
  }
  const std::size_t n = a.dim(0), m = a.dim(1), p = b.dim(1);
  Matrix c(Shape{n, p});
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = c.ptr() + i * p;
    for (std::size_t k = 0; k < m; ++k) {
      const double aik = a.ptr()[i * m + k];
      const double* brow = b.ptr() + k * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

double orthonormality_error(const Matrix& a) {
  const Matrix g = matmul(transpose(a), a);
  double err = 0;
  for (std::size_t i = 0; i < g.dim(0); ++i) {
    for (std::size_t j = 0; j < g.dim(1); ++j) err = std::max(err, std::abs(g.at(i, j) - (i == j ? 1.0 : 0.0)));
  }
  return err;
}

double frobenius(const Matrix& a) {
  double s = 0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

SymmetricEigen symmetric_eigen(const Matrix& input, const JacobiOptions& options) {
  require_square(input, "symmetric_eigen");
  const std::size_t n = input.dim(0);
  Matrix a = input;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(a.at(i, j) - a.at(j, i)) > 1e-9 * (std::abs(a.at(i, j)) + std::abs(a.at(j, i)) + 1e-300)) {
        throw_invalid("symmetric_eigen: matrix is not symmetric");
      }
    }
  }
  if (!a.all_finite()) throw_numerical("symmetric_eigen: non-finite entries");
  Matrix v = identity(n);
  const double norm = frobenius(a);
  std::size_t sweep = 0;
  auto off_diagonal = [&] {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) s += 2 * a.at(i, j) * a.at(i, j);
    }
    return std::sqrt(s);
  };
  while (norm > 0 && off_diagonal() > options.tolerance * norm) {
    if (sweep == options.max_sweeps) {
      throw_numerical("symmetric_eigen: no convergence after " + std::to_string(sweep) + " sweeps");
    }
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a.at(x, x) > a.at(y, y); });
  SymmetricEigen out;
  out.sweeps = sweep;
  out.vectors = Matrix(Shape{n, n});
  for (std::size_t j = 0; j < n; ++j) {
    out.values.push_back(a.at(order[j], order[j]));
    for (std::size_t k = 0; k < n; ++k) out.vectors.at(k, j) = v.at(k, order[j]);
  }
  return out;
}

Svd jacobi_svd(const Matrix& input, const JacobiOptions& options) {
  require_square(input, "jacobi_svd");
  if (!input.all_finite()) throw_numerical("jacobi_svd: non-finite entries");
  const std::size_t n = input.dim(0);
  Matrix u = input;  // columns are rotated until mutually orthogonal
  Matrix v = identity(n);
  std::size_t sweep = 0;
  for (;;) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0, beta = 0, gamma = 0;
        for (std::size_t k = 0; k < n; ++k) {
          alpha += u.at(k, p) * u.at(k, p);
          beta += u.at(k, q) * u.at(k, q);
          gamma += u.at(k, p) * u.at(k, q);
        }
        if (std::abs(gamma) <= options.tolerance * std::sqrt(alpha * beta) || gamma == 0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1 + zeta * zeta));
        const double c = 1 / std::sqrt(1 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < n; ++k) {
          const double ukp = u.at(k, p), ukq = u.at(k, q);
          u.at(k, p) = c * ukp - s * ukq;
          u.at(k, q) = s * ukp + c * ukq;
          const double vkp = v.at(k, p), vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
    if (!rotated) break;
    if (++sweep == options.max_sweeps) {
      throw_numerical("jacobi_svd: no convergence after " + std::to_string(sweep) + " sweeps");
    }
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0;
    for (std::size_t k = 0; k < n; ++k) s += u.at(k, j) * u.at(k, j);
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Svd out;
  out.sweeps = sweep;
  out.u = Matrix(Shape{n, n});
  out.v = Matrix(Shape{n, n});
  const double smax = n ? sigma[order[0]] : 0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.s.push_back(sigma[src]);
    const bool degenerate = sigma[src] <= 1e-14 * std::max(smax, 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
      out.u.at(k, j) = degenerate ? 0.0 : u.at(k, src) / sigma[src];
      out.v.at(k, j) = v.at(k, src);
    }
  }
  // Null directions of A get any orthonormal completion of U.
  out.u = orthonormalize_columns(out.u);
  return out;
}

Matrix orthonormalize_columns(const Matrix& a) {
  require_matrix(a, "orthonormalize_columns");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  if (cols > rows) throw_invalid("orthonormalize_columns: more columns than rows");
  Matrix q = a;
  std::size_t next_unit = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    for (int attempt = 0;; ++attempt) {
      for (int pass = 0; pass < 2; ++pass) {  // re-orthogonalize once for stability
        for (std::size_t i = 0; i < j; ++i) {
          double dot = 0;
          for (std::size_t k = 0; k < rows; ++k) dot += q.at(k, i) * q.at(k, j);
          for (std::size_t k = 0; k < rows; ++k) q.at(k, j) -= dot * q.at(k, i);
        }
      }
      double norm = 0;
      for (std::size_t k = 0; k < rows; ++k) norm += q.at(k, j) * q.at(k, j);
      norm = std::sqrt(norm);
      if (norm > 1e-10) {
        for (std::size_t k = 0; k < rows; ++k) q.at(k, j) /= norm;
        break;
      }
      if (next_unit >= rows || attempt > static_cast<int>(rows)) {
        throw_numerical("orthonormalize_columns: could not complete the basis");
      }
      for (std::size_t k = 0; k < rows; ++k) q.at(k, j) = k == next_unit ? 1.0 : 0.0;
      ++next_unit;
    }
  }
  return q;
}

Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(Shape{n, n});
  for (double& x : g.values()) x = normal(rng);
  return orthonormalize_columns(g);
}

}  // namespace drh::linalg

// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include <cmath>
#include <random>

#include "doctest.h"
#include "drh/baselines.hpp"
#include "oracles.hpp"

using namespace drh;
using linalg::Matrix;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  return oracle::random_tensor({r, c}, rng);
}

// Gram-Schmidt on Gaussian columns, kept separate from the library version.
Matrix oracle_rotation(std::size_t n, std::mt19937_64& rng) {
  Matrix q = random_matrix(n, n, rng);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < j; ++p) {
      double d = 0;
      for (std::size_t i = 0; i < n; ++i) d += q.at(i, j) * q.at(i, p);
      for (std::size_t i = 0; i < n; ++i) q.at(i, j) -= d * q.at(i, p);
    }
    double norm = 0;
    for (std::size_t i = 0; i < n; ++i) norm += q.at(i, j) * q.at(i, j);
    for (std::size_t i = 0; i < n; ++i) q.at(i, j) /= std::sqrt(norm);
  }
  return q;
}

double quantization_error(const Matrix& v, const Matrix& r) {
  double t = 0;
  for (std::size_t i = 0; i < v.dim(0); ++i)
    for (std::size_t j = 0; j < r.dim(1); ++j) {
      double x = 0;
      for (std::size_t k = 0; k < v.dim(1); ++k) x += v.at(i, k) * r.at(k, j);
      t += std::pow((x >= 0 ? 1.0 : -1.0) - x, 2);
    }
  return t;
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("symmetric eigendecomposition and SVD reconstruct their input") {
    std::mt19937_64 rng(1);
    const auto a = random_matrix(6, 6, rng);
    Matrix sym(Shape{6, 6});
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) sym.at(i, j) = a.at(i, j) + a.at(j, i);
    const auto e = linalg::symmetric_eigen(sym);
    CHECK(linalg::orthonormality_error(e.vectors) < 1e-12);
    for (std::size_t j = 0; j + 1 < 6; ++j) CHECK(e.values[j] >= e.values[j + 1]);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        double x = 0;
        for (std::size_t k = 0; k < 6; ++k) x += e.vectors.at(i, k) * e.values[k] * e.vectors.at(j, k);
        CHECK(x == doctest::Approx(sym.at(i, j)).epsilon(1e-10));
      }
    CHECK_THROWS_AS(linalg::symmetric_eigen(a), Error);

    Matrix rankdef = a;
    for (std::size_t i = 0; i < 6; ++i) rankdef.at(i, 5) = rankdef.at(i, 0);
    for (const auto& m : {a, rankdef}) {
      const auto s = linalg::jacobi_svd(m);
      CHECK(linalg::orthonormality_error(s.u) < 1e-12);
      CHECK(linalg::orthonormality_error(s.v) < 1e-12);
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
          double x = 0;
          for (std::size_t k = 0; k < 6; ++k) x += s.u.at(i, k) * s.s[k] * s.v.at(j, k);
          CHECK(std::abs(x - m.at(i, j)) < 1e-10);
        }
    }
    CHECK(linalg::orthonormality_error(linalg::random_orthogonal(7, 3)) < 1e-12);
  }

  TEST_CASE("LSH takes signs of random projections") {
    LshModel m{Matrix(Shape{2, 2}, {1.0, 0.0, 0.0, 1.0})};
    const auto c = lsh_encode(Matrix(Shape{1, 2}, {3.0, -1.0}), m);
    CHECK(c.values == std::vector<std::int8_t>{1, -1});

    std::mt19937_64 rng(2);
    const auto lsh = make_lsh(16, 10, 5);
    const auto f = random_matrix(20, 10, rng);
    Matrix neg = f;
    for (auto& v : neg.values()) v = -v;
    const auto a = lsh_encode(f, lsh), b = lsh_encode(f, lsh), n = lsh_encode(neg, lsh);
    CHECK(a.values == b.values);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(n.values[i] == -a.values[i]);
    CHECK(make_lsh(16, 10, 5).projection == lsh.projection);
    CHECK_FALSE(make_lsh(16, 10, 6).projection == lsh.projection);
    CHECK_THROWS_AS(lsh_encode(random_matrix(2, 9, rng), lsh), Error);
  }

  TEST_CASE("ITQ leaves an exactly binary projection alone") {
    Matrix v(Shape{6, 3}, {1, 1, -1, -1, 1, 1, 1, -1, 1, -1, -1, -1, 1, 1, 1, -1, 1, -1});
    const auto r = itq_refine(v, linalg::identity(3), 5);
    for (double o : r.objective) CHECK(o < 1e-20);
    for (std::size_t i = 0; i < 9; ++i) CHECK(r.rotation[i] == doctest::Approx(linalg::identity(3)[i]));
  }

  TEST_CASE("ITQ objective never increases and beats random rotations") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
      const auto f = random_matrix(40, 8, rng);
      const auto m = itq_train(f, 4, 50, 1 + trial);
      REQUIRE(m.objective.size() == 50);
      for (std::size_t i = 1; i < 50; ++i) CHECK(m.objective[i] <= m.objective[i - 1] * (1 + 1e-12));
      CHECK(linalg::orthonormality_error(m.rotation) < 1e-10);
      Matrix centered = f;
      for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < 8; ++j) centered.at(i, j) -= m.mean[j];
      const auto v = linalg::matmul(centered, m.pca);
      CHECK(quantization_error(v, m.rotation) == doctest::Approx(m.objective.back()).epsilon(1e-10));
      for (int k = 0; k < 100; ++k) CHECK(m.objective.back() <= quantization_error(v, oracle_rotation(4, rng)));
    }
  }

  TEST_CASE("ITQ encodes training items like its final iteration") {
    std::mt19937_64 rng(4);
    auto f = random_matrix(30, 6, rng);
    for (std::size_t j = 0; j < 6; ++j) f.at(29, j) = f.at(28, j);  // a duplicate row
    const auto m = itq_train(f, 3, 20, 2);
    const auto codes = itq_encode(f, m);
    const auto proj = itq_project(f, m);
    for (std::size_t i = 0; i < codes.values.size(); ++i)
      if (std::abs(proj[i]) > 1e-9) CHECK(codes.values[i] == m.train_codes.values[i]);
    for (std::size_t k = 0; k < 3; ++k) CHECK(codes.at(28, k) == codes.at(29, k));
    CHECK_THROWS_AS(itq_encode(random_matrix(2, 5, rng), m), Error);
  }

  TEST_CASE("ITQ rejects a covariance of too low rank") {
    std::mt19937_64 rng(5);
    auto f = random_matrix(20, 5, rng);
    for (std::size_t i = 0; i < 20; ++i) {
      f.at(i, 2) = f.at(i, 0);
      f.at(i, 3) = f.at(i, 1);
      f.at(i, 4) = 0.5 * f.at(i, 0);
    }
    try {
      itq_train(f, 3);
      FAIL("rank-2 features accepted for 3 bits");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kNumerical);
      CHECK(std::string(e.what()).find("rank 2") != std::string::npos);
    }
  }

  TEST_CASE("pixel features and standardisation") {
    Dataset d;
    d.height = d.width = 4;
    d.pixels.assign(32, 0);
    for (std::size_t i = 0; i < 16; ++i) d.pixels[16 + i] = 255;
    d.pixels[0] = 255;
    d.labels = {{0}, {0}};
    d.groups = {0, 1};
    d.vocab = default_vocab(1);
    const std::vector<std::size_t> items{0, 1};
    const auto f = pixel_features(d, items, 2);
    CHECK(f.shape() == Shape{2, 4});
    CHECK(f.at(0, 0) == doctest::Approx(0.25));
    CHECK(f.at(1, 3) == 1.0);
    CHECK_THROWS_AS(pixel_features(d, items, 5), Error);

    const auto st = Standardizer::fit(f);
    const auto z = st.apply(f);
    CHECK(z.at(0, 1) == 0.0 - z.at(1, 1));
    Matrix constant(Shape{3, 1}, 2.0);
    CHECK(Standardizer::fit(constant).apply(constant).at(0, 0) == 0.0);
  }
}

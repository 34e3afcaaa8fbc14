// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "llfc/linalg.hpp"
#include "oracles.hpp"

using llfc::Matrix;

TEST(Matrix, RejectsWrongLengthAndNonFinite) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), llfc::ShapeError);
  EXPECT_THROW(Matrix(1, 2, std::vector<double>{1, std::nan("")}), llfc::DomainError);
  EXPECT_THROW(Matrix(1, 1, std::vector<double>{INFINITY}), llfc::DomainError);
  EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), llfc::ShapeError);
}

TEST(Matmul, MatchesNaiveTripleLoop) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = 1 + gen() % 7, k = 1 + gen() % 7, c = 1 + gen() % 7;
    const Matrix a = oracle::random_matrix(gen, r, k);
    const Matrix b = oracle::random_matrix(gen, k, c);
    const Matrix got = llfc::matmul(a, b);
    const Matrix want = oracle::naive_matmul(a, b);
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12);
    }
    const Matrix bt = llfc::transpose(b);
    const Matrix got_t = llfc::matmul_transposed(a, bt);
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_NEAR(got_t.data()[i], want.data()[i], 1e-12);
    }
  }
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(llfc::matmul(Matrix(2, 3), Matrix(2, 3)), llfc::ShapeError);
  EXPECT_THROW(llfc::add(Matrix(2, 3), Matrix(3, 2)), llfc::ShapeError);
  EXPECT_THROW(llfc::subtract(Matrix(2, 3), Matrix(2, 2)), llfc::ShapeError);
}

TEST(NormalizedDist, SpecialCasesAndHandValue) {
  const std::vector<double> zero{0, 0, 0};
  const std::vector<double> x{1, 2, 2};  // norm 3
  const std::vector<double> y{2, 0, 0};  // norm 2
  EXPECT_EQ(llfc::normalized_dist(zero, zero), 0.0);
  EXPECT_FALSE(llfc::normalized_dist(zero, x).has_value());
  EXPECT_FALSE(llfc::normalized_dist(x, zero).has_value());
  EXPECT_EQ(llfc::normalized_dist(x, x), 0.0);
  // ||x - y||^2 = 1 + 4 + 4 = 9; ||x|| ||y|| = 6.
  EXPECT_DOUBLE_EQ(*llfc::normalized_dist(x, y), 9.0 / 6.0);
  EXPECT_THROW(llfc::normalized_dist(x, std::vector<double>{1, 2}), llfc::ShapeError);
}

TEST(Cosine, SpecialCasesAndClamp) {
  const std::vector<double> zero{0, 0};
  const std::vector<double> x{3, 4};
  const std::vector<double> y{4, 3};
  EXPECT_EQ(llfc::cosine(zero, zero), 1.0);
  EXPECT_EQ(llfc::cosine(x, x), 1.0);
  EXPECT_DOUBLE_EQ(llfc::cosine(x, y), 24.0 / 25.0);
  const std::vector<double> neg{-3, -4};
  EXPECT_EQ(llfc::cosine(x, neg), -1.0);
  const std::vector<double> tiny{1e-300, 1e-300};
  const double c = llfc::cosine(tiny, std::vector<double>{1, 1});
  EXPECT_LE(c, 1.0);
  EXPECT_GE(c, -1.0);
}

TEST(SpectralNorm, TwoByTwoClosedForm) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix m = oracle::random_matrix(gen, 2, 2);
    // sigma_max^2 = (T + sqrt(T^2 - 4 D^2)) / 2 with T = ||m||_F^2, D = det.
    const double t = m(0, 0) * m(0, 0) + m(0, 1) * m(0, 1) + m(1, 0) * m(1, 0) + m(1, 1) * m(1, 1);
    const double d = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double want = std::sqrt((t + std::sqrt(t * t - 4 * d * d)) / 2);
    EXPECT_NEAR(llfc::spectral_norm(m), want, 1e-9 * want);
  }
}

TEST(SpectralNorm, DiagonalAndZero) {
  const std::vector<double> d{0.5, -3.0, 2.0};
  EXPECT_NEAR(llfc::spectral_norm(Matrix::diagonal(d)), 3.0, 1e-12);
  EXPECT_THROW(llfc::spectral_norm(Matrix(3, 3)), llfc::DomainError);
  EXPECT_THROW(llfc::spectral_norm(Matrix::identity(2), 0.0), llfc::DomainError);
}

TEST(SpectralNorm, ReportsNonConvergence) {
  // Two equal-magnitude singular values with opposite signs make the power
  // iteration converge slowly; one iteration is not enough.
  const Matrix m = Matrix::from_rows({{1.0, 0.3}, {0.2, 0.9}});
  try {
    llfc::spectral_norm(m, 1e-16, 1);
    FAIL() << "expected ConvergenceError";
  } catch (const llfc::ConvergenceError& e) {
    EXPECT_GT(e.last_estimate(), 0.0);
  }
}

TEST(SingularSpectrum, DiagonalIsSortedAbs) {
  const std::vector<double> d{0.5, -3.0, 2.0};
  const auto s = llfc::singular_spectrum(Matrix::diagonal(d));
  ASSERT_EQ(s.size(), 3u);
  EXPECT_NEAR(s[0], 3.0, 1e-14);
  EXPECT_NEAR(s[1], 2.0, 1e-14);
  EXPECT_NEAR(s[2], 0.5, 1e-14);
}

TEST(SingularSpectrum, ProductEqualsAbsDeterminant) {
  std::mt19937_64 gen(3);
  for (std::size_t n = 2; n <= 5; ++n) {
    const Matrix m = oracle::random_matrix(gen, n, n);
    const auto s = llfc::singular_spectrum(m);
    double prod = 1.0;
    for (double v : s) prod *= v;
    const double det = std::abs(oracle::determinant(m));
    EXPECT_NEAR(prod, det, 1e-10 * std::max(1.0, det));
  }
}

TEST(SingularSpectrum, WideAndTallAgreeAndMatchFrobenius) {
  std::mt19937_64 gen(5);
  const Matrix m = oracle::random_matrix(gen, 3, 7);
  const auto s = llfc::singular_spectrum(m);
  const auto st = llfc::singular_spectrum(llfc::transpose(m));
  ASSERT_EQ(s.size(), 3u);
  double sq = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(s[i], st[i], 1e-12);
    sq += s[i] * s[i];
  }
  const double fro = llfc::frobenius_norm(m);
  EXPECT_NEAR(sq, fro * fro, 1e-10);
  EXPECT_NEAR(s[0], llfc::spectral_norm(m), 1e-9);
}

TEST(SingularSpectrum, RankOneHasOneNonzero) {
  const Matrix u = Matrix::from_rows({{1}, {2}, {-1}});
  const Matrix v = Matrix::from_rows({{3, 0, 4, 1}});
  const auto s = llfc::singular_spectrum(llfc::matmul(u, v));
  // ||u|| ||v|| = sqrt(6) * sqrt(26).
  EXPECT_NEAR(s[0], std::sqrt(6.0 * 26.0), 1e-12);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_NEAR(s[i], 0.0, 1e-10);
}

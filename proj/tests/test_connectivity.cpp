// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "llfc/connectivity.hpp"
#include "llfc/data.hpp"
#include "oracles.hpp"

TEST(AlphaGrid, Validation) {
  EXPECT_THROW(llfc::AlphaGrid({0.0, 0.5}), llfc::DomainError);
  EXPECT_THROW(llfc::AlphaGrid({0.0, 0.5, 0.5, 1.0}), llfc::DomainError);
  EXPECT_THROW(llfc::AlphaGrid::uniform(1), llfc::DomainError);
  const auto g = llfc::AlphaGrid::uniform(5);
  EXPECT_EQ(g.values(), (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(llfc::AlphaGrid::uniform().size(), 21u);
}

TEST(Interpolate, EndpointsAndMidpoint) {
  std::mt19937_64 gen(1);
  const auto a = oracle::random_params(gen, {2, 3, 2});
  const auto b = oracle::random_params(gen, {2, 3, 2});
  EXPECT_EQ(llfc::interpolate(a, b, 1.0), a);
  EXPECT_EQ(llfc::interpolate(a, b, 0.0), b);
  const auto m = llfc::interpolate(a, b, 0.25);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t k = 0; k < a.weights[l].size(); ++k)
      EXPECT_NEAR(m.weights[l].data()[k], 0.25 * a.weights[l].data()[k] + 0.75 * b.weights[l].data()[k], 1e-15);
  EXPECT_THROW(llfc::interpolate(a, b, 1.5), llfc::DomainError);
  const auto c = oracle::random_params(gen, {2, 4, 2});
  EXPECT_THROW(llfc::interpolate(a, c, 0.5), llfc::ShapeError);
}

TEST(Barrier, HandCurve) {
  // Line at 0.5 is (0.1 + 0.2) / 2 = 0.15, so the bump is 0.35.
  const std::vector<double> alphas{0.0, 0.5, 1.0};
  EXPECT_DOUBLE_EQ(llfc::barrier_of(alphas, std::vector<double>{0.1, 0.5, 0.2}), 0.35);
  // Below the line everywhere -> 0.
  EXPECT_EQ(llfc::barrier_of(alphas, std::vector<double>{0.4, 0.0, 0.4}), 0.0);
}

TEST(ErrorCurve, IdenticalModelsHaveNoBarrier) {
  const auto data = llfc::gen_blobs(1, 30, 3, 2, 1.0);
  const auto p = llfc::init_params(llfc::MlpSpec{{2, 8, 3}}, 2);
  const auto c = llfc::error_curve(p, p, data, llfc::AlphaGrid::uniform(11));
  EXPECT_EQ(c.barrier, 0.0);
  for (double e : c.errors) EXPECT_EQ(e, c.errors.front());
}

TEST(Summarize, MeanStdAndExclusions) {
  const std::vector<std::optional<double>> v{1.0, std::nullopt, 3.0};
  const auto s = llfc::summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.std, 1.0);
  EXPECT_EQ(s.count, 2u);
  EXPECT_EQ(s.excluded, 1u);
  const std::vector<std::optional<double>> none{std::nullopt};
  EXPECT_TRUE(std::isnan(llfc::summarize(none).mean));
}

TEST(FeatureAgreement, Cases) {
  const std::vector<double> u{2, 0}, v{1, 0}, w{0, 3}, z{0, 0};
  auto fa = llfc::feature_agreement(u, v);
  EXPECT_DOUBLE_EQ(*fa.cosine, 1.0);
  EXPECT_DOUBLE_EQ(*fa.coef, 2.0);
  fa = llfc::feature_agreement(u, w);
  EXPECT_DOUBLE_EQ(*fa.cosine, 0.0);
  EXPECT_DOUBLE_EQ(*fa.coef, 0.0);
  EXPECT_FALSE(llfc::feature_agreement(z, u).cosine.has_value());
  EXPECT_FALSE(llfc::feature_agreement(u, z).coef.has_value());
}

TEST(LlfcMetrics, IdenticalModelsAreExact) {
  const auto data = llfc::gen_blobs(1, 20, 3, 2, 1.0);
  const auto p = llfc::init_params(llfc::MlpSpec{{2, 6, 5, 3}}, 3);
  const auto r = llfc::llfc_metrics(p, p, data, llfc::AlphaGrid::uniform(5));
  EXPECT_EQ(r.interior_alphas, (std::vector<double>{0.25, 0.5, 0.75}));
  EXPECT_EQ(r.aggregates.size(), 3u * 3u);
  for (const auto& a : r.aggregates) {
    if (a.excluded_count == data.size()) continue;
    EXPECT_EQ(a.mean_one_minus_cosine_alpha, 0.0);
    EXPECT_EQ(a.mean_coef, 1.0);
  }
  EXPECT_EQ(r.curve.barrier, 0.0);
  EXPECT_THROW(r.aggregate(1, 0.3), llfc::IndexError);
}

TEST(LlfcMetrics, AggregatesMatchPerExampleRecomputation) {
  std::mt19937_64 gen(5);
  const auto data = llfc::gen_blobs(2, 10, 3, 2, 1.0);
  const auto a = oracle::random_params(gen, {2, 5, 3});
  const auto b = oracle::random_params(gen, {2, 5, 3});
  const auto r = llfc::llfc_metrics(a, b, data, llfc::AlphaGrid::uniform(3));
  // Layer 1 at alpha 0.5, recomputed with scalar loops.
  const auto mid = llfc::interpolate(a, b, 0.5);
  const auto hm = oracle::hidden_features(mid, data.x, 1);
  const auto ha = oracle::hidden_features(a, data.x, 1);
  const auto hb = oracle::hidden_features(b, data.x, 1);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double uu = 0, vv = 0, uv = 0;
    for (std::size_t k = 0; k < 5; ++k) {
      const double u = hm(k, i), v = 0.5 * ha(k, i) + 0.5 * hb(k, i);
      uu += u * u;
      vv += v * v;
      uv += u * v;
    }
    if (uu == 0 || vv == 0) continue;
    sum += 1.0 - uv / std::sqrt(uu * vv);
    ++count;
  }
  const auto& agg = r.aggregate(1, 0.5);
  EXPECT_EQ(agg.excluded_count, data.size() - count);
  EXPECT_NEAR(agg.mean_one_minus_cosine_alpha, sum / count, 1e-12);
}

TEST(InterpolationBound, CheckAndPreconditions) {
  llfc::ErrorCurve c;
  c.alphas = {0.0, 0.5, 1.0};
  c.errors = {0.1, 0.15, 0.05};
  EXPECT_TRUE(llfc::lemma1_check(c, 0.1).holds);
  c.errors = {0.1, 0.25, 0.05};
  const auto r = llfc::lemma1_check(c, 0.1);
  EXPECT_FALSE(r.holds);
  EXPECT_EQ(r.witness_alpha, 0.5);
  EXPECT_THROW(llfc::lemma1_check(c, 0.05), llfc::DomainError);
}

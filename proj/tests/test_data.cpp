// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "llfc/data.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("llfc_test_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Best 0-1 training error of any linear classifier on 2-D, 2-class data,
// found by scanning directions and thresholds.
double best_linear_error(const llfc::Dataset& d, int directions) {
  const std::size_t n = d.size();
  std::size_t best = n;
  std::vector<std::pair<double, std::size_t>> proj(n);
  for (int k = 0; k < directions; ++k) {
    const double th = std::numbers::pi * 2.0 * k / directions;
    const double c = std::cos(th), s = std::sin(th);
    for (std::size_t i = 0; i < n; ++i) proj[i] = {c * d.x(0, i) + s * d.x(1, i), d.y[i]};
    std::sort(proj.begin(), proj.end());
    // Predict class 1 above the threshold. Errors = class-1 below + class-0 above.
    std::size_t ones_below = 0, zeros_above = 0;
    for (const auto& [v, y] : proj) zeros_above += (y == 0);
    best = std::min(best, ones_below + zeros_above);
    for (const auto& [v, y] : proj) {
      if (y == 1) ++ones_below; else --zeros_above;
      best = std::min(best, ones_below + zeros_above);
    }
  }
  return static_cast<double>(best) / static_cast<double>(n);
}

}  // namespace

TEST(Blobs, DeterministicAndShaped) {
  const auto a = llfc::gen_blobs(3, 10, 3, 4, 1.0);
  EXPECT_EQ(a, llfc::gen_blobs(3, 10, 3, 4, 1.0));
  EXPECT_NE(a, llfc::gen_blobs(4, 10, 3, 4, 1.0));
  EXPECT_EQ(a.dim(), 4u);
  EXPECT_EQ(a.size(), 30u);
  EXPECT_EQ(a.num_classes, 3u);
  EXPECT_NO_THROW(a.validate());
  EXPECT_THROW(llfc::gen_blobs(3, 10, 1, 2, 1.0), llfc::DomainError);
  EXPECT_THROW(llfc::gen_blobs(3, 10, 3, 2, 0.0), llfc::DomainError);
}

TEST(Blobs, CentersAreDistinct) {
  for (std::size_t dim : {2u, 3u, 5u}) {
    const auto c = llfc::blob_centers(6, dim);
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        double d = 0.0;
        for (std::size_t r = 0; r < dim; ++r) d += (c[i][r] - c[j][r]) * (c[i][r] - c[j][r]);
        EXPECT_GT(d, 1.0) << "dim " << dim << " centers " << i << "," << j;
      }
    }
  }
}

TEST(Blobs, TinySpreadIsPerfectlySeparatedByNearestCentroid) {
  const auto d = llfc::gen_blobs(1, 50, 4, 3, 1e-6);
  const auto centers = llfc::blob_centers(4, 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      double s = 0.0;
      for (std::size_t r = 0; r < 3; ++r) s += (d.x(r, i) - centers[k][r]) * (d.x(r, i) - centers[k][r]);
      if (s < best_d) {
        best_d = s;
        best = k;
      }
    }
    EXPECT_EQ(best, d.y[i]);
  }
}

TEST(Blobs, ClassMeansNearCenters) {
  const std::size_t n = 400;
  const auto d = llfc::gen_blobs(1, n, 2, 2, 1.0);
  const auto centers = llfc::blob_centers(2, 2);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t r = 0; r < 2; ++r) {
      double mean = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.y[i] == k) mean += d.x(r, i);
      }
      mean /= static_cast<double>(n);
      EXPECT_NEAR(mean, centers[k][r], 3.0 / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST(Spirals, NoiselessPointsLieOnTheCurve) {
  const std::size_t n = 40, classes = 3;
  const auto d = llfc::gen_spirals(8, n, classes, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = std::hypot(d.x(0, i), d.x(1, i));
    const double t = static_cast<double>(i % n) / n;
    EXPECT_NEAR(r, t, 1e-12);
    if (r > 1e-9) {
      const double angle = 2 * std::numbers::pi * d.y[i] / classes + llfc::kSpiralTurns * 2 * std::numbers::pi * t;
      EXPECT_NEAR(d.x(0, i), t * std::cos(angle), 1e-12);
      EXPECT_NEAR(d.x(1, i), t * std::sin(angle), 1e-12);
    }
  }
  EXPECT_EQ(d, llfc::gen_spirals(99, n, classes, 0.0));  // seed unused without noise
  EXPECT_EQ(llfc::gen_spirals(5, n, 2, 0.05), llfc::gen_spirals(5, n, 2, 0.05));
}

TEST(Spirals, NotLinearlySeparable) {
  const auto d = llfc::gen_spirals(1, 250, 2, 0.0);
  ASSERT_EQ(d.size(), 500u);
  EXPECT_GT(best_linear_error(d, 3600), 0.20);
}

TEST(Split, SizesDisjointAndDeterministic) {
  const auto d = llfc::gen_blobs(2, 5, 2, 2, 1.0);
  const auto [a, b] = llfc::split(d, 0.5, 11);
  EXPECT_EQ(a.size(), 5u);
  EXPECT_EQ(b.size(), 5u);
  const auto [a2, b2] = llfc::split(d, 0.5, 11);
  EXPECT_EQ(a, a2);
  EXPECT_EQ(b, b2);
  std::multiset<std::pair<double, double>> all, parts;
  for (std::size_t i = 0; i < d.size(); ++i) all.insert({d.x(0, i), d.x(1, i)});
  for (const auto* p : {&a, &b})
    for (std::size_t i = 0; i < p->size(); ++i) parts.insert({p->x(0, i), p->x(1, i)});
  EXPECT_EQ(all, parts);
  EXPECT_THROW(llfc::split(d, 1.0, 0), llfc::DomainError);
}

TEST(Idx, HandBuiltPair) {
  const auto dir = temp_dir("hand");
  // Two 2x2 images: [0 255; 51 102] and [255 0; 0 255]; labels 3 and 1.
  write_bytes(dir / "img", {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2,
                            0, 255, 51, 102, 255, 0, 0, 255});
  write_bytes(dir / "lab", {0, 0, 8, 1, 0, 0, 0, 2, 3, 1});
  const auto d = llfc::load_idx(dir / "img", dir / "lab");
  ASSERT_EQ(d.dim(), 4u);
  ASSERT_EQ(d.size(), 2u);
  const double want[4][2] = {{0.0, 1.0}, {1.0, 0.0}, {0.2, 0.0}, {0.4, 1.0}};
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_DOUBLE_EQ(d.x(r, c), want[r][c]);
  EXPECT_EQ(d.y, (llfc::Labels{3, 1}));
  EXPECT_EQ(d.num_classes, 4u);
}

TEST(Idx, Errors) {
  const auto dir = temp_dir("errors");
  write_bytes(dir / "img", {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 7});
  write_bytes(dir / "lab_wrong_magic", {0, 0, 8, 3, 0, 0, 0, 1, 0});
  write_bytes(dir / "lab_count", {0, 0, 8, 1, 0, 0, 0, 2, 0, 1});
  write_bytes(dir / "lab_ok", {0, 0, 8, 1, 0, 0, 0, 1, 0});
  write_bytes(dir / "img_trunc", {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 7});
  EXPECT_THROW(llfc::load_idx(dir / "img", dir / "lab_wrong_magic"), llfc::FormatError);
  try {
    llfc::load_idx(dir / "img", dir / "lab_count");
    FAIL();
  } catch (const llfc::FormatError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
  EXPECT_THROW(llfc::load_idx(dir / "img_trunc", dir / "lab_ok"), llfc::FormatError);
  EXPECT_THROW(llfc::load_idx(dir / "missing", dir / "lab_ok"), llfc::IoError);
  EXPECT_NO_THROW(llfc::load_idx(dir / "img", dir / "lab_ok"));
}

TEST(Idx, SaveLoadRoundTrip) {
  const auto dir = temp_dir("roundtrip");
  llfc::Dataset d;
  d.x = llfc::Matrix(6, 3);
  for (std::size_t i = 0; i < d.x.size(); ++i) d.x.data()[i] = static_cast<double>((i * 37) % 256) / 255.0;
  d.y = {0, 2, 1};
  d.num_classes = 3;
  llfc::save_idx(d, 2, 3, dir / "i", dir / "l");
  EXPECT_EQ(llfc::load_idx(dir / "i", dir / "l"), d);
}

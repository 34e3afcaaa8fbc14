// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Classification datasets: deterministic synthetic generators, a train/test
// splitter, and IDX (MNIST) ingestion.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "llfc/errors.hpp"
#include "llfc/linalg.hpp"
#include "llfc/rng.hpp"

namespace llfc {

using Labels = std::vector<std::size_t>;

/// Column-major view of a dataset: x is d0 x n, one example per column.
struct Dataset {
  Matrix x;
  Labels y;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t dim() const noexcept { return x.rows(); }

  void validate() const {
    if (x.cols() != y.size()) {
      throw ShapeError("dataset has " + std::to_string(x.cols()) +
                       " columns but " + std::to_string(y.size()) + " labels");
    }
    for (std::size_t label : y) {
      if (label >= num_classes) {
        throw DomainError("label " + std::to_string(label) +
                          " out of range for " + std::to_string(num_classes) +
                          " classes");
      }
    }
  }

  Dataset subset(std::span<const std::size_t> idx) const {
    Dataset out;
    out.x = Matrix(dim(), idx.size());
    out.y.resize(idx.size());
    out.num_classes = num_classes;
    for (std::size_t c = 0; c < idx.size(); ++c) {
      for (std::size_t r = 0; r < dim(); ++r) out.x(r, c) = x(r, idx[c]);
      out.y[c] = y[idx[c]];
    }
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Centers used by gen_blobs, exposed for tests and plotting.
inline std::vector<Vector> blob_centers(std::size_t classes, std::size_t dim) {
  constexpr double kRadius = 4.0;
  std::vector<Vector> centers(classes, Vector(dim, 0.0));
  for (std::size_t k = 0; k < classes; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(classes);
    if (dim == 2) {
      centers[k][0] = kRadius * std::cos(angle);
      centers[k][1] = kRadius * std::sin(angle);
    } else {
      // Split the radius between the circle and one tilt axis.
      const double s = kRadius / std::sqrt(2.0);
      centers[k][0] = s * std::cos(angle);
      centers[k][1] = s * std::sin(angle);
      centers[k][2 + k % (dim - 2)] = s;
    }
  }
  return centers;
}

/// Gaussian clusters with standard deviation `spread` around `classes`
/// distinct centers on a sphere of radius 4. Centers for class k sit at angle
/// 2*pi*k/classes in the plane of the first two coordinates, tilted along
/// coordinate 2 + (k mod (dim-2)) when dim > 2 so that they stay distinct
/// under projection. Examples are ordered class by class.
inline Dataset gen_blobs(std::uint64_t seed, std::size_t n_per_class,
                         std::size_t classes, std::size_t dim, double spread) {
  if (classes < 2) throw DomainError("gen_blobs: need at least 2 classes");
  if (dim < 2) throw DomainError("gen_blobs: need dim >= 2");
  if (!(spread > 0.0)) throw DomainError("gen_blobs: spread must be positive");

  const auto centers = blob_centers(classes, dim);
  CounterRng rng(seed, Stream::kData);
  Dataset d;
  d.num_classes = classes;
  d.x = Matrix(dim, n_per_class * classes);
  d.y.resize(n_per_class * classes);
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const std::size_t col = k * n_per_class + i;
      for (std::size_t r = 0; r < dim; ++r) {
        d.x(r, col) = centers[k][r] + spread * rng.normal();
      }
      d.y[col] = k;
    }
  }
  return d;
}

/// Interleaved 2-D spirals. Class k point at parameter t in [0, 1) lies at
/// radius t and angle 2*pi*k/classes + kSpiralTurns*2*pi*t, plus isotropic
/// Gaussian noise with standard deviation `noise`. Parameters t are evenly
/// spaced: t_i = i / n_per_class.
inline constexpr double kSpiralTurns = 1.25;

inline Dataset gen_spirals(std::uint64_t seed, std::size_t n_per_class,
                           std::size_t classes, double noise) {
  if (classes < 2) throw DomainError("gen_spirals: need at least 2 classes");
  if (noise < 0.0) throw DomainError("gen_spirals: noise must be >= 0");
  CounterRng rng(seed, Stream::kData);
  Dataset d;
  d.num_classes = classes;
  d.x = Matrix(2, n_per_class * classes);
  d.y.resize(n_per_class * classes);
  for (std::size_t k = 0; k < classes; ++k) {
    const double offset = 2.0 * std::numbers::pi * static_cast<double>(k) /
                          static_cast<double>(classes);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const std::size_t col = k * n_per_class + i;
      const double t = static_cast<double>(i) / static_cast<double>(n_per_class);
      const double angle = offset + kSpiralTurns * 2.0 * std::numbers::pi * t;
      double px = t * std::cos(angle);
      double py = t * std::sin(angle);
      if (noise > 0.0) {
        px += noise * rng.normal();
        py += noise * rng.normal();
      }
      d.x(0, col) = px;
      d.x(1, col) = py;
      d.y[col] = k;
    }
  }
  return d;
}

/// Deterministic shuffle-split. The first part gets round(train_fraction*n)
/// examples.
inline std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                         std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DomainError("split: train_fraction must lie in (0, 1)");
  }
  CounterRng rng(seed, Stream::kSplit);
  const auto order = shuffled_indices(data.size(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(data.size())));
  std::span<const std::size_t> all(order);
  return {data.subset(all.first(n_train)), data.subset(all.subspan(n_train))};
}

namespace detail {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& buf,
                               std::size_t offset, const std::string& what) {
  if (offset + 4 > buf.size()) {
    throw FormatError("truncated " + what, offset);
  }
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

inline void put_be32(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<unsigned char>(v >> 24));
  buf.push_back(static_cast<unsigned char>(v >> 16));
  buf.push_back(static_cast<unsigned char>(v >> 8));
  buf.push_back(static_cast<unsigned char>(v));
}

}  // namespace detail

/// Parses an IDX image file (magic 0x00000803, dims n x rows x cols) and
/// its label file (magic 0x00000801). Pixels become x / 255 and each image
/// is flattened row-major into one column. The class count is one more than
/// the largest label.
inline Dataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  const auto img = detail::read_file(images_path);
  const auto lab = detail::read_file(labels_path);

  const std::uint32_t img_magic = detail::read_be32(img, 0, "image header");
  if (img_magic != detail::kIdxImagesMagic) {
    throw FormatError("bad image magic in " + images_path.string(), 0);
  }
  const std::uint32_t n = detail::read_be32(img, 4, "image header");
  const std::uint32_t rows = detail::read_be32(img, 8, "image header");
  const std::uint32_t cols = detail::read_be32(img, 12, "image header");

  const std::uint32_t lab_magic = detail::read_be32(lab, 0, "label header");
  if (lab_magic != detail::kIdxLabelsMagic) {
    throw FormatError("bad label magic in " + labels_path.string(), 0);
  }
  const std::uint32_t n_labels = detail::read_be32(lab, 4, "label header");
  if (n_labels != n) {
    throw FormatError("label count " + std::to_string(n_labels) +
                          " != image count " + std::to_string(n),
                      4);
  }

  const std::size_t pixels = std::size_t{rows} * cols;
  const std::size_t img_needed = 16 + std::size_t{n} * pixels;
  if (img.size() < img_needed) throw FormatError("truncated image data", img.size());
  if (lab.size() < 8 + std::size_t{n}) {
    throw FormatError("truncated label data", lab.size());
  }

  Dataset d;
  d.x = Matrix(pixels, n);
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      d.x(p, i) = static_cast<double>(img[16 + i * pixels + p]) / 255.0;
    }
    d.y[i] = lab[8 + i];
  }
  d.num_classes = n == 0 ? 0 : *std::max_element(d.y.begin(), d.y.end()) + 1;
  return d;
}

/// Writes `data` as an IDX pair with images of shape rows x cols. Feature
/// values are mapped back to bytes by round(255 * x) clamped to [0, 255].
inline void save_idx(const Dataset& data, std::uint32_t rows, std::uint32_t cols,
                     const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path) {
  if (std::size_t{rows} * cols != data.dim()) {
    throw ShapeError("save_idx: image shape does not match feature dimension");
  }
  std::vector<unsigned char> img, lab;
  detail::put_be32(img, detail::kIdxImagesMagic);
  detail::put_be32(img, static_cast<std::uint32_t>(data.size()));
  detail::put_be32(img, rows);
  detail::put_be32(img, cols);
  detail::put_be32(lab, detail::kIdxLabelsMagic);
  detail::put_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t p = 0; p < data.dim(); ++p) {
      const double v = std::clamp(std::round(255.0 * data.x(p, i)), 0.0, 255.0);
      img.push_back(static_cast<unsigned char>(v));
    }
    if (data.y[i] > 255) throw DomainError("save_idx: label does not fit a byte");
    lab.push_back(static_cast<unsigned char>(data.y[i]));
  }
  auto write = [](const std::filesystem::path& p, const std::vector<unsigned char>& b) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!out) throw IoError("short write to " + p.string());
  };
  write(images_path, img);
  write(labels_path, lab);
}

}  // namespace llfc

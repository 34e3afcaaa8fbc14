// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major real matrices and the handful of kernels the rest of the
// library needs: products, norms, cosine / normalized distance, spectral
// norm by power iteration, and singular values by one-sided Jacobi.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llfc/errors.hpp"

namespace llfc {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  /// Takes ownership of row-major `data`. Rejects wrong lengths and
  /// non-finite entries.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " != " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw DomainError("matrix entry is not finite");
    }
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged initializer for Matrix");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(data));
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  Vector column(std::size_t j) const {
    Vector out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " times " + shape_str(b));
  }
  Matrix out(a.rows(), b.cols());
  // i-k-j order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

/// a * b^T without materializing the transpose.
inline Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_transposed: " + shape_str(a) + " times (" +
                     shape_str(b) + ")^T");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto br = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += ar[k] * br[k];
      out(i, j) = s;
    }
  }
  return out;
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("subtract: " + shape_str(a) + " vs " + shape_str(b));
  }
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
  return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("add: " + shape_str(a) + " vs " + shape_str(b));
  }
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("dot: length " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline bool is_zero(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
}

/// ||x - y||^2 / (||x|| ||y||).
///
/// Both vectors zero gives 0. Exactly one zero is undefined and yields
/// nullopt; callers exclude those points from aggregates.
inline std::optional<double> normalized_dist(std::span<const double> x,
                                             std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("normalized_dist: length " + std::to_string(x.size()) +
                     " vs " + std::to_string(y.size()));
  }
  const bool zx = is_zero(x);
  const bool zy = is_zero(y);
  if (zx && zy) return 0.0;
  if (zx || zy) return std::nullopt;
  double diff = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    diff += d * d;
  }
  return diff / (norm(x) * norm(y));
}

/// Cosine similarity clamped to [-1, 1]; 1 when both vectors are zero and
/// when the two inputs are bitwise identical.
inline double cosine(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("cosine: length " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
  if (std::equal(x.begin(), x.end(), y.begin())) return 1.0;
  const double nx = norm(x);
  const double ny = norm(y);
  if (nx == 0.0 && ny == 0.0) return 1.0;
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return std::clamp(dot(x, y) / (nx * ny), -1.0, 1.0);
}

inline double frobenius_norm(const Matrix& m) { return norm(m.data()); }

namespace detail {

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Largest singular value by power iteration on m^T m.
///
/// The start vector is a fixed pseudo-random vector derived from the matrix
/// shape, so repeated calls are reproducible. Iteration stops when the
/// Rayleigh quotient changes by at most `tol` relative.
inline double spectral_norm(const Matrix& m, double tol = 1e-13,
                            std::size_t max_iter = 100000) {
  if (!(tol > 0.0)) throw DomainError("spectral_norm: tol must be positive");
  if (is_zero(m.data())) throw DomainError("spectral_norm: zero matrix");
  const std::size_t n = m.cols();
  Vector v(n);
  std::uint64_t state = detail::splitmix((std::uint64_t{m.rows()} << 32) ^ n);
  for (auto& x : v) {
    state = detail::splitmix(state);
    x = 0.5 + static_cast<double>(state >> 11) * 0x1.0p-53;
  }
  double nv = norm(v);
  for (auto& x : v) x /= nv;

  Vector mv(m.rows());
  Vector w(n);
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < m.rows(); ++i) mv[i] = dot(m.row(i), v);
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      auto r = m.row(i);
      for (std::size_t j = 0; j < n; ++j) w[j] += r[j] * mv[i];
    }
    const double next = dot(mv, mv);  // Rayleigh quotient of m^T m at v
    const double nw = norm(w);
    if (nw == 0.0) {
      // v landed in the null space; m is nonzero so this only happens for
      // adversarial start vectors. Perturb deterministically.
      for (std::size_t j = 0; j < n; ++j) v[j] = (j % 2 == 0) ? 1.0 : -0.5;
      nv = norm(v);
      for (auto& x : v) x /= nv;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) v[j] = w[j] / nw;
    if (it > 0 && std::abs(next - lambda) <= tol * next) return std::sqrt(next);
    lambda = next;
  }
  throw ConvergenceError("spectral_norm: no convergence within max_iter",
                         std::sqrt(lambda));
}

/// All min(rows, cols) singular values in descending order, by one-sided
/// Jacobi rotations on the columns of m (or of m^T when m is wide).
inline std::vector<double> singular_spectrum(const Matrix& m) {
  Matrix a = m.rows() >= m.cols() ? m : transpose(m);
  const std::size_t rows = a.rows();
  const std::size_t n = a.cols();
  if (n == 0) return {};
  const double fro = frobenius_norm(a);
  const double abs_floor = (1e-12 * fro) * (1e-12 * fro);
  constexpr int kMaxSweeps = 60;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          alpha += ap * ap;
          beta += aq * aq;
          gamma += ap * aq;
        }
        if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) ||
            std::abs(gamma) <= abs_floor) {
          continue;
        }
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += a(i, j) * a(i, j);
    sigma[j] = std::sqrt(s);
  }
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  return sigma;
}

}  // namespace llfc

// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Counter-based pseudo-random generator.
//
// Draw k of stream (seed, stream) is mix(key + k) with
// key = mix(seed ^ mix(stream)), where mix is the splitmix64 output function
// (add golden gamma, then the xor-shift-multiply finalizer).
// The output depends only on those three integers, so datasets, initial
// weights and minibatch orders are reproducible across platforms and easy to
// re-derive in another language. Normals use Box-Muller on two consecutive
// uniforms.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "llfc/linalg.hpp"

namespace llfc {

/// Stream identifiers. Each consumer draws from its own stream so that
/// changing one (say, dataset size) never shifts another (initial weights).
enum class Stream : std::uint64_t {
  kData = 1,
  kInit = 2,
  kShuffle = 3,
  kSplit = 4,
  kLayerOrder = 5,
  kConstruction = 6,
  kSearch = 7,
};

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(detail::splitmix(seed ^ detail::splitmix(stream))) {}
  CounterRng(std::uint64_t seed, Stream stream)
      : CounterRng(seed, static_cast<std::uint64_t>(stream)) {}

  std::uint64_t next_u64() { return detail::splitmix(key_ + counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 == 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> shuffled_indices(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

/// Derives a child seed; used to key per-epoch shuffles.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return detail::splitmix(seed ^ detail::splitmix(salt + 0x632BE59BD9B4E019ull));
}

}  // namespace llfc

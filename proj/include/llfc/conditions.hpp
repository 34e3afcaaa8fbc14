// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// The two sufficient conditions for layerwise feature connectivity and
// related diagnostics:
//   - weak additivity of ReLU along the segment between two pre-activations,
//   - commutativity of next-layer weights with previous-layer features,
//   - constructions of pairs that satisfy both exactly,
//   - model stitching without a trained adapter,
//   - stable rank.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "llfc/connectivity.hpp"
#include "llfc/data.hpp"
#include "llfc/errors.hpp"
#include "llfc/linalg.hpp"
#include "llfc/nn.hpp"
#include "llfc/rng.hpp"

namespace llfc {

struct WeakAdditivityLayer {
  std::size_t layer = 0;
  /// Per example, max over the grid of the normalized distance; nullopt when
  /// every grid point was degenerate.
  std::vector<std::optional<double>> dist_sigma;
  /// Grid points skipped because exactly one side was the zero vector.
  std::size_t excluded_points = 0;
};

/// Dist_sigma for a single pair of pre-activation vectors. Returns nullopt if
/// every alpha in the grid is degenerate. `excluded` counts skipped points.
inline std::optional<double> dist_sigma(std::span<const double> ha, std::span<const double> hb,
                                        const AlphaGrid& grid, std::size_t* excluded = nullptr) {
  if (ha.size() != hb.size()) throw ShapeError("dist_sigma: length mismatch");
  const std::size_t d = ha.size();
  Vector lhs(d), rhs(d);
  std::optional<double> best;
  for (double alpha : grid.values()) {
    const double beta = 1.0 - alpha;
    for (std::size_t k = 0; k < d; ++k) {
      const double mix = alpha * ha[k] + beta * hb[k];
      lhs[k] = mix > 0.0 ? mix : 0.0;
      const double ra = ha[k] > 0.0 ? ha[k] : 0.0;
      const double rb = hb[k] > 0.0 ? hb[k] : 0.0;
      rhs[k] = alpha * ra + beta * rb;
    }
    const auto dist = normalized_dist(lhs, rhs);
    if (!dist) {
      if (excluded) ++*excluded;
      continue;
    }
    best = best ? std::max(*best, *dist) : *dist;
  }
  return best;
}

/// Dist_sigma per hidden layer and example, from pre-activations of two
/// models on the same inputs.
inline std::vector<WeakAdditivityLayer> weak_additivity_dist(const FeatureTrace& trace_a,
                                                             const FeatureTrace& trace_b,
                                                             const AlphaGrid& grid) {
  if (trace_a.num_layers() != trace_b.num_layers()) {
    throw ShapeError("weak_additivity_dist: traces have different depth");
  }
  std::vector<WeakAdditivityLayer> out;
  for (std::size_t l = 1; l < trace_a.num_layers(); ++l) {
    const Matrix& pa = trace_a.pre_activation(l);
    const Matrix& pb = trace_b.pre_activation(l);
    if (pa.rows() != pb.rows() || pa.cols() != pb.cols()) {
      throw ShapeError("weak_additivity_dist: shapes differ at layer " + std::to_string(l));
    }
    WeakAdditivityLayer w;
    w.layer = l;
    w.dist_sigma.resize(pa.cols());
    for (std::size_t i = 0; i < pa.cols(); ++i) {
      w.dist_sigma[i] = dist_sigma(pa.column(i), pb.column(i), grid, &w.excluded_points);
    }
    out.push_back(std::move(w));
  }
  return out;
}

struct CommutativityDists {
  std::size_t layer = 0;
  std::optional<double> dist_com;
  std::optional<double> dist_w;
  std::optional<double> dist_h;
};

/// For layers 2..L: Dist_com between vec(W_A H_A + W_B H_B) and
/// vec(W_A H_B + W_B H_A), Dist_W between the layer weights, and Dist_H
/// between the previous-layer features. Layer 1 is skipped because both
/// models see the same input there.
inline std::vector<CommutativityDists> commutativity_dists(const ModelParams& a,
                                                           const ModelParams& b,
                                                           const Dataset& data) {
  require_same_spec(a, b, "commutativity_dists");
  const FeatureTrace ta = forward(a, data.x);
  const FeatureTrace tb = forward(b, data.x);
  std::vector<CommutativityDists> out;
  for (std::size_t l = 2; l <= a.num_layers(); ++l) {
    const Matrix& wa = a.weights[l - 1];
    const Matrix& wb = b.weights[l - 1];
    const Matrix& ha = ta.features(l - 1);
    const Matrix& hb = tb.features(l - 1);
    const Matrix lhs = add(matmul(wa, ha), matmul(wb, hb));
    const Matrix rhs = add(matmul(wa, hb), matmul(wb, ha));
    CommutativityDists c;
    c.layer = l;
    c.dist_com = normalized_dist(lhs.data(), rhs.data());
    c.dist_w = normalized_dist(wa.data(), wb.data());
    c.dist_h = normalized_dist(ha.data(), hb.data());
    out.push_back(c);
  }
  return out;
}

struct ConditionReport {
  std::vector<double> alphas;
  std::vector<WeakAdditivityLayer> weak_additivity;
  std::vector<CommutativityDists> commutativity;
};

inline ConditionReport condition_report(const ModelParams& a, const ModelParams& b,
                                        const Dataset& data, const AlphaGrid& grid) {
  require_same_spec(a, b, "condition_report");
  ConditionReport r;
  r.alphas = grid.values();
  r.weak_additivity = weak_additivity_dist(forward(a, data.x), forward(b, data.x), grid);
  r.commutativity = commutativity_dists(a, b, data);
  return r;
}

enum class ExactPairMode { kSharedWeights, kNonnegRegion };

struct ExactConditionPair {
  ModelParams a;
  ModelParams b;
  Dataset data;
};

namespace detail {

inline constexpr double kConstructionMargin = 0.05;

/// Smallest hidden pre-activation of a model over the data.
inline double min_hidden_preactivation(const ModelParams& p, const Matrix& x) {
  const FeatureTrace t = forward(p, x);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t l = 1; l < p.num_layers(); ++l) {
    for (double v : t.pre_activation(l).data()) m = std::min(m, v);
  }
  return m;
}

}  // namespace detail

/// Builds a pair (a, b) with W_B = W_A and b_B != b_A, plus 32 evaluation
/// inputs, such that every hidden pre-activation of both models is at least
/// a fixed positive margin. Interpolated models then have convex
/// combinations of those pre-activations, so ReLU stays linear along the
/// whole segment (weak additivity) and (W_A - W_B)(H_A - H_B) = 0
/// (commutativity).
///
/// kSharedWeights: signed Gaussian weights and inputs; each hidden bias is
/// raised just enough to clear the margin on the data, then offset by a
/// model-specific random amount.
/// kNonnegRegion: nonnegative weights, biases and inputs.
/// Labels are the argmax of model a's logits, so Err(a) = 0.
inline ExactConditionPair make_exact_condition_pair(const MlpSpec& spec, std::uint64_t seed,
                                                    ExactPairMode mode) {
  spec.validate();
  constexpr std::size_t kExamples = 32;
  const std::size_t L = spec.num_layers();
  CounterRng rng(seed, Stream::kConstruction);

  ExactConditionPair out;
  Matrix x(spec.input_dim(), kExamples);
  for (double& v : x.data()) {
    v = mode == ExactPairMode::kNonnegRegion ? rng.uniform() : rng.normal();
  }

  ModelParams shared = init_params(spec, derive_seed(seed, 1));
  if (mode == ExactPairMode::kNonnegRegion) {
    for (auto& w : shared.weights)
      for (double& v : w.data()) v = std::abs(v);
  }
  out.a = shared;
  out.b = shared;

  Matrix ha = x, hb = x;
  for (std::size_t l = 1; l <= L; ++l) {
    const Matrix& w = shared.weights[l - 1];
    const Matrix za = matmul(w, ha);
    const Matrix zb = matmul(w, hb);
    auto& ba = out.a.biases[l - 1];
    auto& bb = out.b.biases[l - 1];
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const double off_a = rng.uniform(0.1, 1.0);
      const double off_b = rng.uniform(0.1, 1.0);
      if (l == L) {
        ba[i] = rng.normal();
        bb[i] = rng.normal();
        continue;
      }
      if (mode == ExactPairMode::kNonnegRegion) {
        ba[i] = off_a;
        bb[i] = off_b;
      } else {
        const auto ra = za.row(i);
        const auto rb = zb.row(i);
        const double need_a = detail::kConstructionMargin - *std::min_element(ra.begin(), ra.end());
        const double need_b = detail::kConstructionMargin - *std::min_element(rb.begin(), rb.end());
        ba[i] = need_a + off_a;
        bb[i] = need_b + off_b;
      }
    }
    if (l < L) {
      ha = relu(affine(w, ba, ha));
      hb = relu(affine(w, bb, hb));
    }
  }

  const double margin = std::min(detail::min_hidden_preactivation(out.a, x),
                                 detail::min_hidden_preactivation(out.b, x));
  if (!(margin >= detail::kConstructionMargin)) {
    throw ConstructionError("exact-condition pair violates its pre-activation margin (" +
                            std::to_string(margin) + "); retry with another seed");
  }

  out.data.x = std::move(x);
  out.data.num_classes = spec.num_classes();
  const FeatureTrace ta = forward(out.a, out.data.x);
  for (std::size_t i = 0; i < kExamples; ++i) out.data.y.push_back(argmax_column(ta.output(), i));
  return out;
}

/// Error of B_{>layer} o A_{<=layer}: A's post-activations at `layer` are fed
/// into B's remaining layers.
inline double stitch_error(const ModelParams& a, const ModelParams& b, std::size_t layer,
                           const Dataset& data) {
  require_same_spec(a, b, "stitch_error");
  const std::size_t L = a.num_layers();
  if (layer < 1 || layer + 1 > L) {
    throw IndexError("stitch_error: layer " + std::to_string(layer) + " outside 1.." +
                     std::to_string(L - 1));
  }
  const FeatureTrace ta = forward(a, data.x);
  const FeatureTrace tail = forward_from(b, ta.features(layer), layer + 1);
  return classification_error(tail.output(), data.y);
}

/// ||w||_F^2 / ||w||_2^2.
inline double stable_rank(const Matrix& w) {
  if (is_zero(w.data())) throw DomainError("stable_rank: zero matrix");
  const double fro = frobenius_norm(w);
  const double spec = spectral_norm(w);
  return (fro * fro) / (spec * spec);
}

}  // namespace llfc

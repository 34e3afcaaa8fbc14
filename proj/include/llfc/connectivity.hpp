// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Linear paths between two modes: weight interpolation, the error curve and
// its barrier, spawning, and the per-layer feature connectivity metrics
// (cosine to the feature interpolation, cosine between endpoints, and the
// projection coefficient).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "llfc/data.hpp"
#include "llfc/errors.hpp"
#include "llfc/linalg.hpp"
#include "llfc/nn.hpp"

namespace llfc {

/// Strictly ascending interpolation coefficients in [0, 1] that include both
/// endpoints.
class AlphaGrid {
 public:
  explicit AlphaGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2 || values_.front() != 0.0 || values_.back() != 1.0) {
      throw DomainError("AlphaGrid must start at 0 and end at 1");
    }
    for (std::size_t i = 1; i < values_.size(); ++i) {
      if (!(values_[i] > values_[i - 1])) {
        throw DomainError("AlphaGrid must be strictly ascending");
      }
    }
  }

  /// `points` evenly spaced values; 21 gives a step of 0.05.
  static AlphaGrid uniform(std::size_t points = 21) {
    if (points < 2) throw DomainError("AlphaGrid::uniform needs >= 2 points");
    std::vector<double> v(points);
    for (std::size_t i = 0; i < points; ++i) {
      v[i] = static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return AlphaGrid(std::move(v));
  }

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// alpha * a + (1 - alpha) * b on every weight and bias.
inline ModelParams interpolate(const ModelParams& a, const ModelParams& b, double alpha) {
  require_same_spec(a, b, "interpolate");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("interpolate: alpha outside [0, 1]");
  ModelParams out = a;
  const double beta = 1.0 - alpha;
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    auto ow = out.weights[l].data();
    auto bw = b.weights[l].data();
    for (std::size_t i = 0; i < ow.size(); ++i) ow[i] = alpha * ow[i] + beta * bw[i];
    auto& ob = out.biases[l];
    const auto& bb = b.biases[l];
    for (std::size_t i = 0; i < ob.size(); ++i) ob[i] = alpha * ob[i] + beta * bb[i];
  }
  return out;
}

/// Feature interpolation alpha * fa + (1 - alpha) * fb.
inline Matrix interpolate(const Matrix& fa, const Matrix& fb, double alpha) {
  if (fa.rows() != fb.rows() || fa.cols() != fb.cols()) {
    throw ShapeError("interpolate: feature shapes differ");
  }
  Matrix out = fa;
  const double beta = 1.0 - alpha;
  auto o = out.data();
  auto b = fb.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = alpha * o[i] + beta * b[i];
  return out;
}

struct ErrorCurve {
  std::vector<double> alphas;
  std::vector<double> errors;  // Err(alpha * a + (1 - alpha) * b)
  double barrier = 0.0;

  double error_a() const { return errors.back(); }
  double error_b() const { return errors.front(); }
};

/// Max over the grid of Err(theta_alpha) minus the straight line between the
/// endpoint errors. Never negative because the endpoints contribute 0.
inline double barrier_of(std::span<const double> alphas, std::span<const double> errors) {
  if (alphas.size() != errors.size() || alphas.empty()) {
    throw ShapeError("barrier_of: alphas and errors must be nonempty and aligned");
  }
  const double err_b = errors.front();
  const double err_a = errors.back();
  double barrier = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double line = (1.0 - alphas[i]) * err_b + alphas[i] * err_a;
    barrier = std::max(barrier, errors[i] - line);
  }
  return barrier;
}

inline ErrorCurve error_curve(const ModelParams& a, const ModelParams& b, const Dataset& data,
                              const AlphaGrid& grid) {
  require_same_spec(a, b, "error_curve");
  ErrorCurve c;
  c.alphas = grid.values();
  for (double alpha : grid.values()) {
    c.errors.push_back(classification_error(interpolate(a, b, alpha), data));
  }
  c.barrier = barrier_of(c.alphas, c.errors);
  return c;
}

/// Spawning: train jointly from `init` for k_steps minibatch updates keyed by
/// cfg.seed, copy the trainer (parameters and optimizer state), then finish
/// each copy with its own minibatch stream (seed_a, seed_b).
inline std::pair<ModelParams, ModelParams> spawn_pair(const ModelParams& init,
                                                      const Dataset& data,
                                                      const TrainConfig& cfg,
                                                      std::size_t k_steps,
                                                      std::uint64_t seed_a,
                                                      std::uint64_t seed_b) {
  Trainer parent(init, data, cfg);
  if (k_steps > parent.total_steps()) {
    throw DomainError("spawn_pair: k_steps " + std::to_string(k_steps) +
                      " exceeds total steps " + std::to_string(parent.total_steps()));
  }
  parent.run(k_steps, cfg.seed);
  Trainer child_a = parent;
  Trainer child_b = parent;
  child_a.run_to_end(seed_a);
  child_b.run_to_end(seed_b);
  return {child_a.params(), child_b.params()};
}

/// Spawning from a fresh initialization drawn with cfg.seed.
inline std::pair<ModelParams, ModelParams> spawn_pair(const MlpSpec& spec, const Dataset& data,
                                                      const TrainConfig& cfg,
                                                      std::size_t k_steps,
                                                      std::uint64_t seed_a,
                                                      std::uint64_t seed_b) {
  return spawn_pair(init_params(spec, cfg.seed), data, cfg, k_steps, seed_a, seed_b);
}

/// Mean and population standard deviation over defined values.
struct Summary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
  std::size_t excluded = 0;
};

inline Summary summarize(std::span<const std::optional<double>> values) {
  Summary s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++s.count;
    } else {
      ++s.excluded;
    }
  }
  if (s.count == 0) {
    s.mean = std::nan("");
    s.std = std::nan("");
    return s;
  }
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (const auto& v : values) {
    if (v) ss += (*v - s.mean) * (*v - s.mean);
  }
  s.std = std::sqrt(ss / static_cast<double>(s.count));
  return s;
}

/// Cosine of u (interpolated model's feature) with v (feature interpolation)
/// and coef = ||u|| cos(u, v) / ||v||. Undefined when either vector is zero.
struct FeatureAgreement {
  std::optional<double> cosine;
  std::optional<double> coef;
};

inline FeatureAgreement feature_agreement(std::span<const double> u, std::span<const double> v) {
  if (is_zero(u) || is_zero(v)) return {};
  if (std::equal(u.begin(), u.end(), v.begin(), v.end())) return {1.0, 1.0};
  const double cos = cosine(u, v);
  return {cos, norm(u) * cos / norm(v)};
}

struct LlfcLayerAlpha {
  std::size_t layer = 0;
  double alpha = 0.0;
  std::vector<std::optional<double>> cosine_alpha;  // per example
  std::vector<std::optional<double>> coef_alpha;    // per example
};

struct LlfcAggregate {
  std::size_t layer = 0;
  double alpha = 0.0;
  double mean_one_minus_cosine_alpha = 0.0;
  double std_one_minus_cosine_alpha = 0.0;
  double mean_one_minus_cosine_ab = 0.0;
  double std_one_minus_cosine_ab = 0.0;
  double mean_coef = 0.0;
  double std_coef = 0.0;
  /// Examples excluded because a feature vector was zero.
  std::size_t excluded_count = 0;
};

struct LlfcReport {
  std::size_t num_layers = 0;
  std::vector<double> interior_alphas;
  /// cosine_ab[l-1][i] = cos(f^(l)(a; x_i), f^(l)(b; x_i)).
  std::vector<std::vector<std::optional<double>>> cosine_ab;
  /// One entry per (layer, interior alpha), layer-major.
  std::vector<LlfcLayerAlpha> per_example;
  std::vector<LlfcAggregate> aggregates;
  ErrorCurve curve;

  const LlfcAggregate& aggregate(std::size_t layer, double alpha) const {
    for (const auto& a : aggregates) {
      if (a.layer == layer && std::abs(a.alpha - alpha) < 1e-12) return a;
    }
    throw IndexError("LlfcReport: no aggregate for layer " + std::to_string(layer) +
                     " alpha " + std::to_string(alpha));
  }
};

namespace detail {

inline std::optional<double> one_minus(const std::optional<double>& v) {
  if (!v) return std::nullopt;
  return 1.0 - *v;
}

}  // namespace detail

/// Per-layer feature connectivity of the pair (a, b) on `data`. Layer l uses
/// post-activations H^(l) (logits at the output layer), one vector per
/// example. Metrics are computed at every interior grid value; endpoints are
/// identities.
inline LlfcReport llfc_metrics(const ModelParams& a, const ModelParams& b, const Dataset& data,
                               const AlphaGrid& grid) {
  require_same_spec(a, b, "llfc_metrics");
  LlfcReport r;
  r.num_layers = a.num_layers();
  const FeatureTrace ta = forward(a, data.x);
  const FeatureTrace tb = forward(b, data.x);
  const std::size_t n = data.size();

  r.cosine_ab.resize(r.num_layers);
  for (std::size_t l = 1; l <= r.num_layers; ++l) {
    const Matrix& fa = ta.features(l);
    const Matrix& fb = tb.features(l);
    auto& row = r.cosine_ab[l - 1];
    row.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vector u = fa.column(i);
      const Vector v = fb.column(i);
      if (!is_zero(u) && !is_zero(v)) row[i] = cosine(u, v);
    }
  }

  for (double alpha : grid.values()) {
    if (alpha > 0.0 && alpha < 1.0) r.interior_alphas.push_back(alpha);
  }
  std::vector<FeatureTrace> interp;
  interp.reserve(r.interior_alphas.size());
  for (double alpha : r.interior_alphas) {
    interp.push_back(forward(interpolate(a, b, alpha), data.x));
  }

  for (std::size_t l = 1; l <= r.num_layers; ++l) {
    std::vector<std::optional<double>> one_minus_ab(n);
    for (std::size_t i = 0; i < n; ++i) one_minus_ab[i] = detail::one_minus(r.cosine_ab[l - 1][i]);
    const Summary ab = summarize(one_minus_ab);

    for (std::size_t k = 0; k < r.interior_alphas.size(); ++k) {
      const double alpha = r.interior_alphas[k];
      const Matrix& fi = interp[k].features(l);
      const Matrix mix = interpolate(ta.features(l), tb.features(l), alpha);
      LlfcLayerAlpha e;
      e.layer = l;
      e.alpha = alpha;
      e.cosine_alpha.resize(n);
      e.coef_alpha.resize(n);
      std::vector<std::optional<double>> one_minus_cos(n);
      for (std::size_t i = 0; i < n; ++i) {
        const FeatureAgreement fa = feature_agreement(fi.column(i), mix.column(i));
        e.cosine_alpha[i] = fa.cosine;
        e.coef_alpha[i] = fa.coef;
        one_minus_cos[i] = detail::one_minus(fa.cosine);
      }
      const Summary cs = summarize(one_minus_cos);
      const Summary coef = summarize(e.coef_alpha);

      LlfcAggregate agg;
      agg.layer = l;
      agg.alpha = alpha;
      agg.mean_one_minus_cosine_alpha = cs.mean;
      agg.std_one_minus_cosine_alpha = cs.std;
      agg.mean_one_minus_cosine_ab = ab.mean;
      agg.std_one_minus_cosine_ab = ab.std;
      agg.mean_coef = coef.mean;
      agg.std_coef = coef.std;
      agg.excluded_count = cs.excluded;
      r.aggregates.push_back(agg);
      r.per_example.push_back(std::move(e));
    }
  }

  r.curve.alphas = grid.values();
  for (std::size_t k = 0, j = 0; k < grid.size(); ++k) {
    const double alpha = grid[k];
    if (alpha == 0.0) {
      r.curve.errors.push_back(classification_error(tb.output(), data.y));
    } else if (alpha == 1.0) {
      r.curve.errors.push_back(classification_error(ta.output(), data.y));
    } else {
      r.curve.errors.push_back(classification_error(interp[j++].output(), data.y));
    }
  }
  r.curve.barrier = barrier_of(r.curve.alphas, r.curve.errors);
  return r;
}

struct Lemma1Result {
  bool holds = true;
  double threshold = 0.0;
  std::optional<double> witness_alpha;  // first violating alpha
  double witness_error = 0.0;
};

/// Checks Err(theta_alpha) <= 2 * eps at every interior grid point. Requires
/// both endpoint errors <= eps.
inline Lemma1Result lemma1_check(const ErrorCurve& curve, double eps) {
  if (curve.errors.empty()) throw DomainError("lemma1_check: empty curve");
  const double max_endpoint = std::max(curve.error_a(), curve.error_b());
  if (max_endpoint > eps) {
    throw DomainError("lemma1_check: endpoint error " + std::to_string(max_endpoint) +
                      " exceeds eps " + std::to_string(eps));
  }
  Lemma1Result r;
  r.threshold = 2.0 * eps;
  for (std::size_t i = 0; i < curve.alphas.size(); ++i) {
    const double alpha = curve.alphas[i];
    if (alpha <= 0.0 || alpha >= 1.0) continue;
    if (curve.errors[i] > r.threshold) {
      r.holds = false;
      r.witness_alpha = alpha;
      r.witness_error = curve.errors[i];
      break;
    }
  }
  return r;
}

inline Lemma1Result lemma1_check(const LlfcReport& report, double eps) {
  return lemma1_check(report.curve, eps);
}

}  // namespace llfc

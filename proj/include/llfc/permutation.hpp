// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hidden-unit permutation symmetry: applying per-layer permutations to a
// model, exact linear assignment, activation and weight matching, and the
// commutativity residual with a pairwise-swap local search over it.
//
// A permutation is stored as an index array p with (P M)[i] = M[p[i]], i.e.
// output row i is taken from input row p[i]. Permutations are never
// materialized as dense matrices.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "llfc/data.hpp"
#include "llfc/errors.hpp"
#include "llfc/linalg.hpp"
#include "llfc/nn.hpp"
#include "llfc/rng.hpp"

namespace llfc {

using Permutation = std::vector<std::size_t>;

inline bool is_bijection(const Permutation& p) {
  std::vector<bool> seen(p.size(), false);
  for (std::size_t v : p) {
    if (v >= p.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

inline Permutation identity_permutation(std::size_t n) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

inline Permutation inverse(const Permutation& p) {
  Permutation q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[p[i]] = i;
  return q;
}

/// out[i] = m[p[i]] (row gather, i.e. P m).
inline Matrix gather_rows(const Matrix& m, const Permutation& p) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto src = m.row(p[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

/// One permutation per hidden layer 1..L-1. Input and output layers are
/// fixed to the identity.
struct LayerPermutation {
  std::vector<Permutation> perms;  // perms[l-1] acts on layer l

  static LayerPermutation identity(const MlpSpec& spec) {
    LayerPermutation pi;
    for (std::size_t l = 1; l < spec.num_layers(); ++l) {
      pi.perms.push_back(identity_permutation(spec.dims[l]));
    }
    return pi;
  }

  /// Validates bijectivity of every layer and, when given, the widths.
  void validate() const {
    for (std::size_t l = 0; l < perms.size(); ++l) {
      if (!is_bijection(perms[l])) {
        throw ValidationError("permutation for layer " + std::to_string(l + 1) +
                              " is not a bijection");
      }
    }
  }

  void validate(const MlpSpec& spec) const {
    validate();
    if (perms.size() + 1 != spec.num_layers()) {
      throw ShapeError("permutation has " + std::to_string(perms.size()) +
                       " layers, model has " + std::to_string(spec.num_layers() - 1) +
                       " hidden layers");
    }
    for (std::size_t l = 0; l < perms.size(); ++l) {
      if (perms[l].size() != spec.dims[l + 1]) {
        throw ShapeError("permutation width mismatch at layer " + std::to_string(l + 1));
      }
    }
  }

  LayerPermutation inverse() const {
    LayerPermutation out;
    for (const auto& p : perms) out.perms.push_back(llfc::inverse(p));
    return out;
  }

  /// Permutation of layer l (0 and L are the identity of width n).
  Permutation at(std::size_t layer, std::size_t width) const {
    if (layer == 0 || layer > perms.size()) return identity_permutation(width);
    return perms[layer - 1];
  }

  friend bool operator==(const LayerPermutation&, const LayerPermutation&) = default;
};

/// The composition "first `inner`, then `outer`":
/// apply(apply(t, inner), outer) == apply(t, compose(outer, inner)).
inline LayerPermutation compose(const LayerPermutation& outer, const LayerPermutation& inner) {
  if (outer.perms.size() != inner.perms.size()) throw ShapeError("compose: depth mismatch");
  LayerPermutation out;
  for (std::size_t l = 0; l < outer.perms.size(); ++l) {
    const auto& po = outer.perms[l];
    const auto& pi = inner.perms[l];
    if (po.size() != pi.size()) throw ShapeError("compose: width mismatch");
    Permutation c(po.size());
    for (std::size_t i = 0; i < po.size(); ++i) c[i] = pi[po[i]];
    out.perms.push_back(std::move(c));
  }
  return out;
}

/// W'^(l) = P^(l) W^(l) P^(l-1)^T and b'^(l) = P^(l) b^(l). The result
/// computes the same function as theta.
inline ModelParams apply(const ModelParams& theta, const LayerPermutation& pi) {
  theta.validate();
  const MlpSpec spec = theta.spec();
  pi.validate(spec);
  const std::size_t L = theta.num_layers();
  ModelParams out = theta;
  for (std::size_t l = 1; l <= L; ++l) {
    const Matrix& w = theta.weights[l - 1];
    const Permutation rows = pi.at(l == L ? 0 : l, w.rows());
    const Permutation cols = pi.at(l - 1, w.cols());
    Matrix& ow = out.weights[l - 1];
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) ow(i, j) = w(rows[i], cols[j]);
    for (std::size_t i = 0; i < w.rows(); ++i) out.biases[l - 1][i] = theta.biases[l - 1][rows[i]];
  }
  return out;
}

/// Squared parameter distance ||a - b||^2 over all weights and biases.
inline double squared_distance(const ModelParams& a, const ModelParams& b) {
  require_same_spec(a, b, "squared_distance");
  double s = 0.0;
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    auto wa = a.weights[l].data();
    auto wb = b.weights[l].data();
    for (std::size_t i = 0; i < wa.size(); ++i) s += (wa[i] - wb[i]) * (wa[i] - wb[i]);
    for (std::size_t i = 0; i < a.biases[l].size(); ++i) {
      const double d = a.biases[l][i] - b.biases[l][i];
      s += d * d;
    }
  }
  return s;
}

struct LapResult {
  Permutation assignment;  // row i -> column assignment[i]
  double total_cost = 0.0;
};

namespace detail {

/// Rebuilds `row_to_col` so that it is the lexicographically smallest perfect
/// matching inside the tight-edge graph. Every perfect matching of tight
/// edges is optimal, so the result is the lexicographically smallest optimum.
inline void lexicographic_tight_matching(const std::vector<std::vector<bool>>& tight,
                                         Permutation& row_to_col) {
  const std::size_t n = row_to_col.size();
  Permutation col_to_row = inverse(row_to_col);
  std::vector<bool> fixed_row(n, false), fixed_col(n, false);

  // Finds an alternating path from free row `start` to free column `target`
  // avoiding fixed rows/columns, and flips it.
  auto augment = [&](std::size_t start, std::size_t target) {
    std::vector<std::size_t> parent_col(n, n);  // column -> row we came from
    std::vector<bool> seen_col(n, false);
    std::vector<std::size_t> queue{start};
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t r = queue[head];
      for (std::size_t c = 0; c < n; ++c) {
        if (fixed_col[c] || seen_col[c] || !tight[r][c]) continue;
        seen_col[c] = true;
        parent_col[c] = r;
        if (c == target) {
          // Flip along the path back to start.
          std::size_t col = c;
          while (true) {
            const std::size_t row = parent_col[col];
            const std::size_t prev = row_to_col[row];
            row_to_col[row] = col;
            col_to_row[col] = row;
            if (row == start) break;
            col = prev;
          }
          return true;
        }
        const std::size_t next = col_to_row[c];
        if (next < n && !fixed_row[next]) queue.push_back(next);
      }
    }
    return false;
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (fixed_col[j] || !tight[i][j]) continue;
      if (row_to_col[i] == j) break;
      const Permutation save_rc = row_to_col;
      const Permutation save_cr = col_to_row;
      const std::size_t displaced_row = col_to_row[j];
      const std::size_t freed_col = row_to_col[i];
      row_to_col[i] = j;
      col_to_row[j] = i;
      row_to_col[displaced_row] = n;
      col_to_row[freed_col] = n;
      fixed_row[i] = true;
      fixed_col[j] = true;
      if (augment(displaced_row, freed_col)) break;
      fixed_row[i] = false;
      fixed_col[j] = false;
      row_to_col = save_rc;
      col_to_row = save_cr;
    }
    fixed_row[i] = true;
    fixed_col[row_to_col[i]] = true;
  }
}

}  // namespace detail

/// Exact minimum-cost assignment of a square cost matrix (shortest
/// augmenting path Hungarian method, O(n^3)). Among optimal assignments the
/// lexicographically smallest is returned; costs within 1e-9 relative of
/// tight count as ties.
inline LapResult solve_lap(const Matrix& cost) {
  if (cost.rows() != cost.cols()) {
    throw ShapeError("solve_lap: cost matrix must be square, got " + shape_str(cost));
  }
  const std::size_t n = cost.rows();
  LapResult res;
  if (n == 0) return res;
  double scale = 1.0;
  for (double v : cost.data()) {
    if (!std::isfinite(v)) throw DomainError("solve_lap: non-finite cost");
    scale = std::max(scale, std::abs(v));
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] = row matched to column j, way[] = augmenting tree.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  res.assignment.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) res.assignment[p[j] - 1] = j - 1;

  const double tol = 1e-9 * scale;
  std::vector<std::vector<bool>> tight(n, std::vector<bool>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) tight[i][j] = cost(i, j) - u[i + 1] - v[j + 1] <= tol;
  detail::lexicographic_tight_matching(tight, res.assignment);

  for (std::size_t i = 0; i < n; ++i) res.total_cost += cost(i, res.assignment[i]);
  return res;
}

/// Per hidden layer, the permutation minimizing ||H_A - P H_B||_F^2, found
/// as the LAP with cost -H_A H_B^T. Returns pi such that pi(theta_B) aligns
/// with theta_A.
inline LayerPermutation activation_matching(const FeatureTrace& trace_a,
                                            const FeatureTrace& trace_b) {
  if (trace_a.num_layers() != trace_b.num_layers()) {
    throw ShapeError("activation_matching: traces have different depth");
  }
  LayerPermutation pi;
  for (std::size_t l = 1; l < trace_a.num_layers(); ++l) {
    const Matrix& ha = trace_a.features(l);
    const Matrix& hb = trace_b.features(l);
    if (ha.rows() != hb.rows() || ha.cols() != hb.cols()) {
      throw ShapeError("activation_matching: feature shapes differ at layer " +
                       std::to_string(l));
    }
    Matrix cost = matmul_transposed(ha, hb);
    for (double& c : cost.data()) c = -c;
    pi.perms.push_back(solve_lap(cost).assignment);
  }
  return pi;
}

/// Sum over hidden layers of ||H_A^(l) - P^(l) H_B^(l)||_F^2.
inline double activation_matching_objective(const FeatureTrace& trace_a,
                                            const FeatureTrace& trace_b,
                                            const LayerPermutation& pi) {
  double s = 0.0;
  for (std::size_t l = 1; l < trace_a.num_layers(); ++l) {
    const Matrix diff = subtract(trace_a.features(l), gather_rows(trace_b.features(l), pi.perms[l - 1]));
    const double f = frobenius_norm(diff);
    s += f * f;
  }
  return s;
}

namespace detail {

/// Similarity between row i of layer l in A and row j of layer l in B given
/// the neighbouring permutations: incoming weights, outgoing weights and bias.
inline Matrix weight_matching_similarity(const ModelParams& a, const ModelParams& b,
                                         const LayerPermutation& pi, std::size_t l) {
  const Matrix& wa_in = a.weights[l - 1];
  const Matrix& wb_in = b.weights[l - 1];
  const Matrix& wa_out = a.weights[l];
  const Matrix& wb_out = b.weights[l];
  const std::size_t d = wa_in.rows();
  const std::size_t L = a.num_layers();
  const Permutation prev = pi.at(l - 1, wa_in.cols());
  const Permutation next = pi.at(l + 1 == L ? 0 : l + 1, wa_out.rows());

  // W_B^(l) P^(l-1)^T: column gather.
  Matrix wb_in_p(d, wb_in.cols());
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < wb_in.cols(); ++k) wb_in_p(j, k) = wb_in(j, prev[k]);
  Matrix s = matmul_transposed(wa_in, wb_in_p);

  // W_A^(l+1)^T P^(l+1) W_B^(l+1): row gather of W_B^(l+1).
  const Matrix wb_out_p = gather_rows(wb_out, next);
  const Matrix out_term = matmul(transpose(wa_out), wb_out_p);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      s(i, j) += out_term(i, j) + a.biases[l - 1][i] * b.biases[l - 1][j];
    }
  }
  return s;
}

}  // namespace detail

/// Coordinate descent on ||theta_A - pi(theta_B)||^2. Each pass visits the
/// hidden layers in a seed-determined random order and re-solves that
/// layer's LAP with its neighbours fixed. An update is kept only if it
/// lowers the objective. Stops after a pass without improvement or after
/// max_passes. If `objective_trace` is given it receives the objective
/// before the first pass and after each pass.
inline LayerPermutation weight_matching(const ModelParams& a, const ModelParams& b,
                                        std::uint64_t seed, std::size_t max_passes,
                                        std::vector<double>* objective_trace = nullptr) {
  require_same_spec(a, b, "weight_matching");
  const MlpSpec spec = a.spec();
  LayerPermutation pi = LayerPermutation::identity(spec);
  const std::size_t hidden = spec.num_layers() - 1;
  double objective = squared_distance(a, apply(b, pi));
  if (objective_trace) objective_trace->assign(1, objective);

  for (std::size_t pass = 0; pass < max_passes && hidden > 0; ++pass) {
    CounterRng rng(derive_seed(seed, pass), Stream::kLayerOrder);
    const Permutation order = shuffled_indices(hidden, rng);
    bool improved = false;
    for (std::size_t k : order) {
      const std::size_t l = k + 1;
      Matrix cost = detail::weight_matching_similarity(a, b, pi, l);
      for (double& c : cost.data()) c = -c;
      const Permutation candidate = solve_lap(cost).assignment;
      if (candidate == pi.perms[l - 1]) continue;
      LayerPermutation trial = pi;
      trial.perms[l - 1] = candidate;
      const double trial_obj = squared_distance(a, apply(b, trial));
      if (trial_obj < objective - 1e-12 * std::max(1.0, objective)) {
        pi = std::move(trial);
        objective = trial_obj;
        improved = true;
      }
    }
    if (objective_trace) objective_trace->push_back(objective);
    if (!improved) break;
  }
  return pi;
}

/// For each layer l = 1..L, the squared Frobenius norm of
/// (W_A^(l) - P^(l) W_B^(l) P^(l-1)^T)(H_A^(l-1) - P^(l-1) H_B^(l-1))
/// on the examples of `data`.
inline std::vector<double> commutativity_objective(const ModelParams& a, const ModelParams& b,
                                                   const LayerPermutation& pi,
                                                   const Dataset& data) {
  require_same_spec(a, b, "commutativity_objective");
  const ModelParams bp = apply(b, pi);
  const FeatureTrace ta = forward(a, data.x);
  const FeatureTrace tb = forward(b, data.x);
  std::vector<double> out;
  for (std::size_t l = 1; l <= a.num_layers(); ++l) {
    const Matrix dw = subtract(a.weights[l - 1], bp.weights[l - 1]);
    const Matrix& hb = tb.features(l - 1);
    const Matrix dh = subtract(ta.features(l - 1), gather_rows(hb, pi.at(l - 1, hb.rows())));
    const double f = frobenius_norm(matmul(dw, dh));
    out.push_back(f * f);
  }
  return out;
}

struct QapSearchResult {
  LayerPermutation perm;
  double initial_objective = 0.0;
  /// Objective after each accepted swap; strictly decreasing.
  std::vector<double> objective_trace;
};

namespace detail {

inline double sq_norm_rows_diff(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return s;
}

/// Cached residual pieces for the swap search. For layer l:
///   wa_dh[l] = W_A^(l) D_H^(l-1), wbp_dh[l] = W_B'^(l) D_H^(l-1),
///   resid[l] = wa_dh[l] - wbp_dh[l],
/// where W_B' is the permuted B weight and D_H = H_A - P H_B.
struct QapState {
  ModelParams bp;
  std::vector<Matrix> hb_perm;  // P^(l) H_B^(l), l = 0..L
  std::vector<Matrix> wa_dh, wbp_dh, resid;
  std::vector<double> layer_obj;
  double total = 0.0;
};

inline QapState build_qap_state(const ModelParams& a, const ModelParams& b,
                                const LayerPermutation& pi, const FeatureTrace& ta,
                                const FeatureTrace& tb) {
  QapState s;
  s.bp = apply(b, pi);
  const std::size_t L = a.num_layers();
  for (std::size_t l = 0; l <= L; ++l) {
    const Matrix& hb = tb.features(l);
    s.hb_perm.push_back(gather_rows(hb, pi.at(l == L ? 0 : l, hb.rows())));
  }
  s.wa_dh.resize(L + 1);
  s.wbp_dh.resize(L + 1);
  s.resid.resize(L + 1);
  s.layer_obj.assign(L + 1, 0.0);
  for (std::size_t l = 1; l <= L; ++l) {
    const Matrix dh = subtract(ta.features(l - 1), s.hb_perm[l - 1]);
    s.wa_dh[l] = matmul(a.weights[l - 1], dh);
    s.wbp_dh[l] = matmul(s.bp.weights[l - 1], dh);
    s.resid[l] = subtract(s.wa_dh[l], s.wbp_dh[l]);
    const double f = frobenius_norm(s.resid[l]);
    s.layer_obj[l] = f * f;
    s.total += s.layer_obj[l];
  }
  return s;
}

/// Objective change from swapping entries i and j of the layer-l permutation.
/// Rows i, j of the layer-l residual become wa_dh[i] - wbp_dh[j] and
/// wa_dh[j] - wbp_dh[i]; the layer-(l+1) residual receives a rank-2 update.
inline double swap_delta(const ModelParams& a, const FeatureTrace& ta, const QapState& s,
                         std::size_t l, std::size_t i, std::size_t j) {
  double delta = 0.0;
  {
    const Matrix& r = s.resid[l];
    delta += sq_norm_rows_diff(s.wa_dh[l].row(i), s.wbp_dh[l].row(j)) +
             sq_norm_rows_diff(s.wa_dh[l].row(j), s.wbp_dh[l].row(i)) -
             dot(r.row(i), r.row(i)) - dot(r.row(j), r.row(j));
  }
  {
    const Matrix& r = s.resid[l + 1];
    const Matrix& wa = a.weights[l];
    const Matrix& wbp = s.bp.weights[l];
    const Matrix& g = s.hb_perm[l];
    const Matrix& ha = ta.features(l);
    const std::size_t n = r.cols();
    double new_sq = 0.0;
    for (std::size_t row = 0; row < r.rows(); ++row) {
      const double u1 = wa(row, i) - wa(row, j);
      const double u2 = wbp(row, j) - wbp(row, i);
      auto rr = r.row(row);
      auto gi = g.row(i);
      auto gj = g.row(j);
      auto hai = ha.row(i);
      auto haj = ha.row(j);
      for (std::size_t c = 0; c < n; ++c) {
        const double v = rr[c] - u1 * (gj[c] - gi[c]) - u2 * (hai[c] - haj[c]);
        new_sq += v * v;
      }
    }
    delta += new_sq - s.layer_obj[l + 1];
  }
  return delta;
}

}  // namespace detail

/// Greedy best-improvement pairwise-swap descent on the summed commutativity
/// residual, starting at `init`. Each iteration scans every swap (layer, i, j)
/// in a seed-determined layer order and applies the best strictly improving
/// one. Stops at a swap-local optimum or after max_iters accepted swaps.
inline QapSearchResult qap_local_search(const ModelParams& a, const ModelParams& b,
                                        const Dataset& data, const LayerPermutation& init,
                                        std::uint64_t seed, std::size_t max_iters) {
  require_same_spec(a, b, "qap_local_search");
  const MlpSpec spec = a.spec();
  init.validate(spec);
  const FeatureTrace ta = forward(a, data.x);
  const FeatureTrace tb = forward(b, data.x);
  const std::size_t hidden = spec.num_layers() - 1;

  QapSearchResult res;
  res.perm = init;
  detail::QapState state = detail::build_qap_state(a, b, res.perm, ta, tb);
  res.initial_objective = state.total;

  CounterRng rng(seed, Stream::kSearch);
  const Permutation layer_order = shuffled_indices(hidden, rng);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    const double threshold = -1e-12 * std::max(1.0, state.total);
    double best = threshold;
    std::size_t best_l = 0, best_i = 0, best_j = 0;
    for (std::size_t k : layer_order) {
      const std::size_t l = k + 1;
      const std::size_t d = spec.dims[l];
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
          const double delta = detail::swap_delta(a, ta, state, l, i, j);
          if (delta < best) {
            best = delta;
            best_l = l;
            best_i = i;
            best_j = j;
          }
        }
      }
    }
    if (best_l == 0) break;
    LayerPermutation trial = res.perm;
    std::swap(trial.perms[best_l - 1][best_i], trial.perms[best_l - 1][best_j]);
    detail::QapState next = detail::build_qap_state(a, b, trial, ta, tb);
    if (!(next.total < state.total)) break;  // rounding ate the predicted gain
    res.perm = std::move(trial);
    state = std::move(next);
    res.objective_trace.push_back(state.total);
  }
  return res;
}

}  // namespace llfc

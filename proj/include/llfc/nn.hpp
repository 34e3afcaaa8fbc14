// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// L-layer ReLU multilayer perceptron: parameters, full-trace forward pass,
// softmax cross-entropy gradients, and a deterministic minibatch trainer.
//
// Layer l (1-based) maps H^(l-1) to pre-activation W^(l) H^(l-1) + b^(l) 1^T;
// hidden layers apply ReLU, the output layer does not (outputs are logits).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "llfc/data.hpp"
#include "llfc/errors.hpp"
#include "llfc/linalg.hpp"
#include "llfc/rng.hpp"

namespace llfc {

struct MlpSpec {
  /// Layer widths d_0 (input) ... d_L (classes).
  std::vector<std::size_t> dims;

  std::size_t num_layers() const noexcept { return dims.empty() ? 0 : dims.size() - 1; }
  std::size_t input_dim() const { return dims.front(); }
  std::size_t num_classes() const { return dims.back(); }

  void validate() const {
    if (dims.size() < 2) throw ShapeError("MlpSpec needs at least one weight layer");
    for (std::size_t d : dims) {
      if (d == 0) throw ShapeError("MlpSpec widths must be >= 1");
    }
  }

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Weights and biases of every layer. Index 0 holds layer 1.
struct ModelParams {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  std::size_t num_layers() const noexcept { return weights.size(); }

  MlpSpec spec() const {
    MlpSpec s;
    if (weights.empty()) return s;
    s.dims.push_back(weights.front().cols());
    for (const auto& w : weights) s.dims.push_back(w.rows());
    return s;
  }

  /// Throws ShapeError unless shapes chain and biases match rows.
  void validate() const {
    if (weights.empty()) throw ShapeError("ModelParams has no layers");
    if (biases.size() != weights.size()) {
      throw ShapeError("ModelParams: weight/bias layer count mismatch");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (biases[l].size() != weights[l].rows()) {
        throw ShapeError("ModelParams: bias length mismatch at layer " +
                         std::to_string(l + 1));
      }
      if (l > 0 && weights[l].cols() != weights[l - 1].rows()) {
        throw ShapeError("ModelParams: layer " + std::to_string(l + 1) +
                         " input width does not match previous output");
      }
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Shape-compatible zero parameters.
inline ModelParams zeros_like(const ModelParams& p) {
  ModelParams z;
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    z.weights.emplace_back(p.weights[l].rows(), p.weights[l].cols());
    z.biases.emplace_back(p.biases[l].size(), 0.0);
  }
  return z;
}

inline void require_same_spec(const ModelParams& a, const ModelParams& b,
                              const char* who) {
  if (a.spec() != b.spec()) throw ShapeError(std::string(who) + ": parameter specs differ");
}

/// Pre-activations of layers 1..L and post-activations of layers 0..L.
struct FeatureTrace {
  std::vector<Matrix> pre;   // pre[l-1] = H~^(l)
  std::vector<Matrix> post;  // post[l] = H^(l), post[0] = X

  std::size_t num_layers() const noexcept { return pre.size(); }
  const Matrix& output() const { return post.back(); }
  const Matrix& pre_activation(std::size_t layer) const { return pre.at(layer - 1); }
  const Matrix& features(std::size_t layer) const { return post.at(layer); }
};

/// Kaiming-normal weights N(0, 2/fan_in), zero biases.
inline ModelParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  CounterRng rng(seed, Stream::kInit);
  ModelParams p;
  for (std::size_t l = 1; l <= spec.num_layers(); ++l) {
    const std::size_t fan_in = spec.dims[l - 1];
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    Matrix w(spec.dims[l], fan_in);
    for (double& v : w.data()) v = scale * rng.normal();
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(spec.dims[l], 0.0);
  }
  return p;
}

/// W h + b 1^T for a block of examples.
inline Matrix affine(const Matrix& w, const Vector& b, const Matrix& h) {
  Matrix out = matmul(w, h);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (double& v : r) v += b[i];
  }
  return out;
}

inline Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

/// Runs layers first_layer..L of `params` starting from activations `h` of
/// layer first_layer-1. Used for full forward passes and for stitching.
inline FeatureTrace forward_from(const ModelParams& params, Matrix h,
                                 std::size_t first_layer) {
  const std::size_t L = params.num_layers();
  if (first_layer < 1 || first_layer > L) {
    throw IndexError("forward_from: layer " + std::to_string(first_layer) +
                     " out of range 1.." + std::to_string(L));
  }
  if (h.rows() != params.weights[first_layer - 1].cols()) {
    throw ShapeError("forward: input has " + std::to_string(h.rows()) +
                     " rows, layer expects " +
                     std::to_string(params.weights[first_layer - 1].cols()));
  }
  FeatureTrace t;
  t.post.push_back(std::move(h));
  for (std::size_t l = first_layer; l <= L; ++l) {
    Matrix pre = affine(params.weights[l - 1], params.biases[l - 1], t.post.back());
    Matrix post = l < L ? relu(pre) : pre;
    t.pre.push_back(std::move(pre));
    t.post.push_back(std::move(post));
  }
  return t;
}

inline FeatureTrace forward(const ModelParams& params, const Matrix& x) {
  params.validate();
  return forward_from(params, x, 1);
}

/// Column argmax; ties go to the lowest index.
inline std::size_t argmax_column(const Matrix& logits, std::size_t col) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < logits.rows(); ++k) {
    if (logits(k, col) > logits(best, col)) best = k;
  }
  return best;
}

/// Fraction of columns whose argmax differs from the label.
inline double classification_error(const Matrix& logits, std::span<const std::size_t> labels) {
  if (logits.cols() != labels.size()) {
    throw ShapeError("classification_error: " + std::to_string(logits.cols()) +
                     " outputs vs " + std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (argmax_column(logits, i) != labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

inline double classification_error(const ModelParams& params, const Dataset& data) {
  return classification_error(forward(params, data.x).output(), data.y);
}

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grad;
};

/// Mean softmax cross-entropy over the columns of x, and its exact gradient.
inline LossAndGrad loss_and_grad(const ModelParams& params, const Matrix& x,
                                 std::span<const std::size_t> y) {
  params.validate();
  if (x.cols() != y.size()) {
    throw ShapeError("loss_and_grad: " + std::to_string(x.cols()) + " columns vs " +
                     std::to_string(y.size()) + " labels");
  }
  const std::size_t c = params.weights.back().rows();
  for (std::size_t label : y) {
    if (label >= c) throw DomainError("loss_and_grad: label out of range");
  }
  const std::size_t n = y.size();
  const std::size_t L = params.num_layers();
  const FeatureTrace t = forward(params, x);

  // delta starts as dLoss/dLogits = (softmax - onehot) / n.
  Matrix delta(c, n);
  double loss = 0.0;
  const Matrix& logits = t.output();
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) mx = std::max(mx, logits(k, i));
    double z = 0.0;
    for (std::size_t k = 0; k < c; ++k) z += std::exp(logits(k, i) - mx);
    const double log_z = mx + std::log(z);
    loss += log_z - logits(y[i], i);
    for (std::size_t k = 0; k < c; ++k) {
      delta(k, i) = std::exp(logits(k, i) - log_z) / static_cast<double>(n);
    }
    delta(y[i], i) -= 1.0 / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);

  LossAndGrad out;
  out.loss = loss;
  out.grad = zeros_like(params);
  for (std::size_t l = L; l >= 1; --l) {
    out.grad.weights[l - 1] = matmul_transposed(delta, t.post[l - 1]);
    auto& gb = out.grad.biases[l - 1];
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      const auto row = delta.row(r);
      gb[r] = std::accumulate(row.begin(), row.end(), 0.0);
    }
    if (l == 1) break;
    Matrix back = matmul(transpose(params.weights[l - 1]), delta);
    const Matrix& pre = t.pre[l - 2];
    for (std::size_t i = 0; i < back.size(); ++i) {
      if (!(pre.data()[i] > 0.0)) back.data()[i] = 0.0;
    }
    delta = std::move(back);
  }
  return out;
}

enum class OptimizerKind { kSgdMomentum, kAdam };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double momentum = 0.9;  // SGD only
  double beta1 = 0.9;     // Adam only
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Coupled L2: weight_decay * theta is added to the gradient.
  double weight_decay = 0.0;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  /// Step-decay schedule: multiply the rate by lr_decay_factor at the start
  /// of each listed epoch. Empty means constant.
  std::vector<std::size_t> lr_decay_epochs;
  double lr_decay_factor = 0.1;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be > 0");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (!(lr_decay_factor > 0.0)) throw ConfigError("lr_decay_factor must be > 0");
  }
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double train_error = 0.0;
};

/// Minibatch trainer with explicit step control.
///
/// Step s belongs to epoch s / steps_per_epoch. Each epoch draws a fresh
/// permutation of the training set from the shuffle seed passed to `run`,
/// keyed by the epoch index; batches are consecutive slices of it (the last
/// one may be short). Because the order depends only on (seed, epoch), a
/// trainer copied mid-run and continued with a different seed diverges only
/// in the minibatch order, which is what spawning needs.
class Trainer {
 public:
  Trainer(ModelParams init, const Dataset& data, TrainConfig cfg)
      : params_(std::move(init)), data_(&data), cfg_(std::move(cfg)) {
    cfg_.validate();
    params_.validate();
    data.validate();
    if (params_.spec().input_dim() != data.dim()) {
      throw ShapeError("Trainer: model input width does not match data");
    }
    if (params_.spec().num_classes() < data.num_classes) {
      throw ShapeError("Trainer: model has fewer outputs than classes");
    }
    first_moment_ = zeros_like(params_);
    second_moment_ = zeros_like(params_);
  }

  std::size_t steps_per_epoch() const {
    return (data_->size() + cfg_.batch_size - 1) / cfg_.batch_size;
  }
  std::size_t total_steps() const { return steps_per_epoch() * cfg_.epochs; }
  std::size_t steps_done() const noexcept { return step_; }
  const ModelParams& params() const noexcept { return params_; }
  const std::vector<EpochStats>& history() const noexcept { return history_; }
  const TrainConfig& config() const noexcept { return cfg_; }

  /// Rebinds the dataset (needed after copying a trainer whose data lives
  /// elsewhere).
  void set_data(const Dataset& data) { data_ = &data; }

  /// Performs up to `steps` updates, stopping early at total_steps().
  void run(std::size_t steps, std::uint64_t shuffle_seed) {
    const std::size_t end = std::min(total_steps(), step_ + steps);
    while (step_ < end) step_once(shuffle_seed);
  }

  void run_to_end(std::uint64_t shuffle_seed) { run(total_steps() - step_, shuffle_seed); }

 private:
  double learning_rate_for(std::size_t epoch) const {
    double lr = cfg_.learning_rate;
    for (std::size_t e : cfg_.lr_decay_epochs) {
      if (epoch >= e) lr *= cfg_.lr_decay_factor;
    }
    return lr;
  }

  void step_once(std::uint64_t shuffle_seed) {
    const std::size_t spe = steps_per_epoch();
    const std::size_t epoch = step_ / spe;
    const std::size_t batch = step_ % spe;
    if (batch == 0 || epoch_seed_ != shuffle_seed || order_epoch_ != epoch) {
      CounterRng rng(derive_seed(shuffle_seed, epoch), Stream::kShuffle);
      order_ = shuffled_indices(data_->size(), rng);
      epoch_seed_ = shuffle_seed;
      order_epoch_ = epoch;
    }
    const std::size_t lo = batch * cfg_.batch_size;
    const std::size_t hi = std::min(data_->size(), lo + cfg_.batch_size);
    std::span<const std::size_t> idx(order_.data() + lo, hi - lo);
    const Dataset mb = data_->subset(idx);

    LossAndGrad lg = loss_and_grad(params_, mb.x, mb.y);
    if (!std::isfinite(lg.loss)) {
      throw DivergenceError("training diverged: non-finite loss at step " +
                                std::to_string(step_),
                            step_);
    }
    apply_update(lg.grad, learning_rate_for(epoch));
    ++step_;

    epoch_loss_sum_ += lg.loss;
    ++epoch_batches_;
    if (batch + 1 == spe) {
      EpochStats s;
      s.epoch = epoch;
      s.mean_loss = epoch_loss_sum_ / static_cast<double>(epoch_batches_);
      s.train_error = classification_error(params_, *data_);
      history_.push_back(s);
      epoch_loss_sum_ = 0.0;
      epoch_batches_ = 0;
    }
  }

  void apply_update(ModelParams& grad, double lr) {
    ++update_count_;
    const double wd = cfg_.weight_decay;
    auto update = [&](std::span<double> theta, std::span<double> g, std::span<double> m,
                      std::span<double> v) {
      for (std::size_t i = 0; i < theta.size(); ++i) {
        double gi = g[i] + wd * theta[i];
        if (cfg_.optimizer == OptimizerKind::kSgdMomentum) {
          m[i] = cfg_.momentum * m[i] + gi;
          theta[i] -= lr * m[i];
        } else {
          m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
          v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
          const double t = static_cast<double>(update_count_);
          const double m_hat = m[i] / (1.0 - std::pow(cfg_.beta1, t));
          const double v_hat = v[i] / (1.0 - std::pow(cfg_.beta2, t));
          theta[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.adam_epsilon);
        }
      }
    };
    for (std::size_t l = 0; l < params_.num_layers(); ++l) {
      update(params_.weights[l].data(), grad.weights[l].data(),
             first_moment_.weights[l].data(), second_moment_.weights[l].data());
      update(params_.biases[l], grad.biases[l], first_moment_.biases[l],
             second_moment_.biases[l]);
    }
  }

  ModelParams params_;
  const Dataset* data_;
  TrainConfig cfg_;
  ModelParams first_moment_;
  ModelParams second_moment_;
  std::size_t step_ = 0;
  std::size_t update_count_ = 0;
  std::vector<std::size_t> order_;
  std::uint64_t epoch_seed_ = 0;
  std::size_t order_epoch_ = static_cast<std::size_t>(-1);
  double epoch_loss_sum_ = 0.0;
  std::size_t epoch_batches_ = 0;
  std::vector<EpochStats> history_;
};

/// Trains from `params` for cfg.epochs epochs with minibatch order keyed by
/// cfg.seed. Optionally returns per-epoch statistics.
inline ModelParams train(ModelParams params, const Dataset& data, const TrainConfig& cfg,
                         std::vector<EpochStats>* history = nullptr) {
  Trainer trainer(std::move(params), data, cfg);
  trainer.run_to_end(cfg.seed);
  if (history) *history = trainer.history();
  return trainer.params();
}

}  // namespace llfc

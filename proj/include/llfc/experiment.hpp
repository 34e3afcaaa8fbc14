// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// The end-to-end pipeline behind `llfc run`: build data, obtain a pair of
// models according to the method block, measure the configured suites and
// write everything into the output directory.

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "llfc/conditions.hpp"
#include "llfc/config.hpp"
#include "llfc/connectivity.hpp"
#include "llfc/data.hpp"
#include "llfc/io.hpp"
#include "llfc/nn.hpp"
#include "llfc/permutation.hpp"
#include "llfc/reports.hpp"

namespace llfc {

inline Dataset build_dataset(const DatasetConfig& d) {
  switch (d.generator) {
    case DatasetKind::kBlobs:
      return gen_blobs(d.seed, d.n_per_class, d.classes, d.dim, d.spread);
    case DatasetKind::kSpirals:
      return gen_spirals(d.seed, d.n_per_class, d.classes, d.noise);
    case DatasetKind::kIdx:
      return load_idx(d.images, d.labels);
  }
  throw ConfigError("unknown dataset generator");
}

struct ModelPair {
  ModelParams a;
  ModelParams b;  // already aligned to a when a matching was applied
  std::optional<LayerPermutation> perm;
};

/// Trains the two models described by the method block. Spawned pairs share
/// the first spawn_steps() updates (initialization and minibatch order from
/// training.seed). Independent models start from init_params(seed_a) and
/// init_params(seed_b) and shuffle with their own seeds.
inline ModelPair train_pair(const ExperimentConfig& cfg, const Dataset& train_set) {
  const MlpSpec spec = cfg.spec();
  const auto& m = cfg.method;
  ModelPair out;
  if (m.kind == MethodKind::kSpawn) {
    const Trainer probe(init_params(spec, cfg.training.seed), train_set, cfg.training);
    const std::size_t k = cfg.spawn_steps(probe.total_steps());
    std::tie(out.a, out.b) = spawn_pair(spec, train_set, cfg.training, k, m.seed_a, m.seed_b);
    return out;
  }
  TrainConfig ta = cfg.training, tb = cfg.training;
  ta.seed = m.seed_a;
  tb.seed = m.seed_b;
  out.a = train(init_params(spec, m.seed_a), train_set, ta);
  out.b = train(init_params(spec, m.seed_b), train_set, tb);
  if (m.matching == MatchingKind::kWeight) {
    out.perm = weight_matching(out.a, out.b, m.matching_seed, m.matching_passes);
  } else if (m.matching == MatchingKind::kActivation) {
    out.perm = activation_matching(forward(out.a, train_set.x), forward(out.b, train_set.x));
  }
  if (out.perm) out.b = apply(out.b, *out.perm);
  return out;
}

struct ExperimentResult {
  std::string config_hash;
  std::vector<std::filesystem::path> written;
  ModelPair models;
  std::optional<ErrorCurve> curve;
};

/// Runs the pipeline. The config is validated before any compute. Outputs:
/// model_a.ckpt, model_b.ckpt (b after alignment), perm.json when a matching
/// ran, and one table per requested suite.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult res;
  res.config_hash = cfg.hash();

  Dataset all = build_dataset(cfg.dataset);
  if (cfg.dataset.generator == DatasetKind::kIdx) {
    const MlpSpec spec = cfg.spec();
    if (all.dim() != spec.input_dim() || all.num_classes > spec.num_classes()) {
      throw ConfigError("model.dims does not fit the IDX data (input " +
                        std::to_string(all.dim()) + ", classes " +
                        std::to_string(all.num_classes) + ")");
    }
    all.num_classes = spec.num_classes();
  }
  auto [train_set, test_set] = split(all, cfg.dataset.train_fraction, cfg.dataset.seed);
  const Dataset& eval = cfg.analysis.eval_on_test ? test_set : train_set;

  res.models = train_pair(cfg, train_set);
  const ModelParams& a = res.models.a;
  const ModelParams& b = res.models.b;
  const AlphaGrid grid = AlphaGrid::uniform(cfg.analysis.alpha_points);

  std::vector<Table> tables;
  if (cfg.wants("llfc")) {
    LlfcReport r = llfc_metrics(a, b, eval, grid);
    tables.push_back(llfc_table(r));
    res.curve = std::move(r.curve);
  } else if (cfg.wants("curve")) {
    res.curve = error_curve(a, b, eval, grid);
  }
  if (cfg.wants("curve")) tables.push_back(curve_table(*res.curve));
  if (cfg.wants("conditions")) {
    const ConditionReport r = condition_report(a, b, eval, grid);
    tables.push_back(weak_additivity_table(r));
    tables.push_back(commutativity_table(r));
  }
  if (cfg.wants("stitch") && a.num_layers() > 1) tables.push_back(stitch_table(stitch_rows(a, b, eval)));
  if (cfg.wants("srank")) {
    const std::vector<NamedModel> named{{"a", &a}, {"b", &b}};
    tables.push_back(srank_table(named));
    tables.push_back(spectrum_table(named));
  }

  const auto& dir = cfg.output.directory;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
  save_checkpoint(a, dir / "model_a.ckpt");
  save_checkpoint(b, dir / "model_b.ckpt");
  res.written = {dir / "model_a.ckpt", dir / "model_b.ckpt"};
  if (res.models.perm) {
    save_permutation(*res.models.perm, dir / "perm.json");
    res.written.push_back(dir / "perm.json");
  }
  for (auto& p : emit_reports(tables, dir, cfg.output.formats, res.config_hash)) {
    res.written.push_back(std::move(p));
  }
  return res;
}

}  // namespace llfc

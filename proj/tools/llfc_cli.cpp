// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Every subcommand reads the same INI config (the
// defaults apply when --config is omitted), so evaluation data is rebuilt
// deterministically from the dataset block instead of being passed around.
//
// Exit codes: 0 ok, 2 configuration or usage error, 3 numeric failure,
// 4 I/O or file format error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "llfc/llfc.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kConfigExit = 2, kNumericExit = 3, kIoExit = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> formats;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config (INI)");
  cmd->add_option("--seed", c.seed, "seed for this stage's randomness");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--format", c.formats, "report format(s): csv, json")
      ->check(CLI::IsMember({"csv", "json"}));
}

llfc::ExperimentConfig load(const Common& c) {
  llfc::ExperimentConfig cfg = c.config.empty() ? llfc::ExperimentConfig{}
                                                : llfc::load_config(c.config);
  if (!c.out.empty()) cfg.output.directory = c.out;
  if (!c.formats.empty()) {
    cfg.output.formats.clear();
    for (const auto& f : c.formats) {
      cfg.output.formats.push_back(f == "json" ? llfc::ReportFormat::kJson : llfc::ReportFormat::kCsv);
    }
  }
  return cfg;
}

struct Splits {
  llfc::Dataset train;
  llfc::Dataset eval;
};

Splits build_splits(const llfc::ExperimentConfig& cfg) {
  llfc::Dataset all = llfc::build_dataset(cfg.dataset);
  if (cfg.dataset.generator == llfc::DatasetKind::kIdx) all.num_classes = cfg.spec().num_classes();
  auto [tr, te] = llfc::split(all, cfg.dataset.train_fraction, cfg.dataset.seed);
  Splits s{std::move(tr), std::move(te)};
  if (!cfg.analysis.eval_on_test) s.eval = s.train;
  return s;
}

void emit(const llfc::ExperimentConfig& cfg, const std::vector<llfc::Table>& tables) {
  for (const auto& p : llfc::emit_reports(tables, cfg.output.directory, cfg.output.formats, cfg.hash())) {
    std::cout << p.string() << '\n';
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw llfc::IoError("cannot create output directory " + dir.string());
}

struct PairArgs {
  std::string a, b, perm;
};

void add_pair(CLI::App* cmd, PairArgs& p, bool need_b = true) {
  cmd->add_option("--a", p.a, "checkpoint of model A")->required();
  auto* ob = cmd->add_option("--b", p.b, "checkpoint of model B");
  if (need_b) ob->required();
  cmd->add_option("--perm", p.perm, "permutation file applied to B first");
}

std::pair<llfc::ModelParams, llfc::ModelParams> load_pair(const PairArgs& p) {
  llfc::ModelParams a = llfc::load_checkpoint(p.a);
  llfc::ModelParams b = llfc::load_checkpoint(p.b);
  if (!p.perm.empty()) b = llfc::apply(b, llfc::load_permutation(p.perm));
  return {std::move(a), std::move(b)};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const llfc::ConfigError*>(&e) || dynamic_cast<const llfc::IndexError*>(&e)) {
    return kConfigExit;
  }
  if (dynamic_cast<const llfc::IoError*>(&e) || dynamic_cast<const llfc::FormatError*>(&e) ||
      dynamic_cast<const llfc::ValidationError*>(&e)) {
    return kIoExit;
  }
  return kNumericExit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear mode connectivity and layerwise feature connectivity toolkit"};
  app.require_subcommand(1);

  Common c;
  PairArgs pair;
  std::string match_method = "weight";
  std::size_t passes = 100, qap_iters = 10000;
  std::optional<std::size_t> k_steps;
  std::string name = "model";
  std::size_t alpha_points = 0;

  auto* gen = app.add_subcommand("gen-data", "write the configured dataset as a table");
  add_common(gen, c);

  auto* tr = app.add_subcommand("train", "train one model; --seed sets init and shuffle");
  add_common(tr, c);
  tr->add_option("--name", name, "checkpoint file stem");

  auto* sp = app.add_subcommand("spawn", "train a spawned pair; --seed sets the shared phase");
  add_common(sp, c);
  sp->add_option("--k-steps", k_steps, "shared steps (overrides the method block)");

  auto* ma = app.add_subcommand("match", "align B to A; writes perm.json and model_b_aligned.ckpt");
  add_common(ma, c);
  add_pair(ma, pair);
  ma->add_option("--method", match_method, "weight, activation or qap")
      ->check(CLI::IsMember({"weight", "activation", "qap"}));
  ma->add_option("--passes", passes, "weight-matching passes");
  ma->add_option("--max-iters", qap_iters, "accepted swaps for qap");

  std::vector<CLI::App*> analysis;
  for (const char* sub : {"interp", "llfc", "conditions", "stitch"}) {
    auto* cmd = app.add_subcommand(sub, std::string("measure ") + sub + " on the evaluation split");
    add_common(cmd, c);
    add_pair(cmd, pair);
    cmd->add_option("--alpha-points", alpha_points, "interpolation grid size");
    analysis.push_back(cmd);
  }
  auto* sr = app.add_subcommand("srank", "stable rank and spectrum of every layer");
  add_common(sr, c);
  add_pair(sr, pair, false);

  auto* run = app.add_subcommand("run", "full pipeline; --seed sets training.seed");
  add_common(run, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigExit;
  }

  try {
    llfc::ExperimentConfig cfg = load(c);
    if (alpha_points) cfg.analysis.alpha_points = alpha_points;

    if (gen->parsed()) {
      if (c.seed) cfg.dataset.seed = *c.seed;
      cfg.validate();
      const Splits s = build_splits(cfg);
      llfc::Table t{"dataset", {}, {}};
      for (std::size_t r = 0; r < s.train.dim(); ++r) t.columns.push_back("x" + std::to_string(r));
      t.columns.push_back("label");
      t.columns.push_back("split");
      for (const auto* part : {&s.train, &s.eval}) {
        for (std::size_t i = 0; i < part->size(); ++i) {
          std::vector<llfc::Cell> row;
          for (std::size_t r = 0; r < part->dim(); ++r) row.emplace_back(part->x(r, i));
          row.emplace_back(static_cast<std::int64_t>(part->y[i]));
          row.emplace_back(std::string(part == &s.train ? "train" : "test"));
          t.rows.push_back(std::move(row));
        }
      }
      emit(cfg, {t});
    } else if (tr->parsed()) {
      if (c.seed) cfg.training.seed = *c.seed;
      cfg.validate();
      const Splits s = build_splits(cfg);
      const llfc::ModelParams p =
          llfc::train(llfc::init_params(cfg.spec(), cfg.training.seed), s.train, cfg.training);
      ensure_dir(cfg.output.directory);
      const fs::path path = cfg.output.directory / (name + ".ckpt");
      llfc::save_checkpoint(p, path);
      std::cout << path.string() << '\n';
    } else if (sp->parsed()) {
      if (c.seed) cfg.training.seed = *c.seed;
      cfg.method.kind = llfc::MethodKind::kSpawn;
      if (k_steps) {
        cfg.method.k_steps = k_steps;
        cfg.method.spawn_fraction.reset();
      }
      cfg.validate();
      const Splits s = build_splits(cfg);
      const llfc::ModelPair m = llfc::train_pair(cfg, s.train);
      ensure_dir(cfg.output.directory);
      for (const auto& [p, stem] : {std::pair{&m.a, "model_a"}, std::pair{&m.b, "model_b"}}) {
        const fs::path path = cfg.output.directory / (std::string(stem) + ".ckpt");
        llfc::save_checkpoint(*p, path);
        std::cout << path.string() << '\n';
      }
    } else if (ma->parsed()) {
      if (c.seed) cfg.method.matching_seed = *c.seed;
      cfg.validate();
      const llfc::ModelParams a = llfc::load_checkpoint(pair.a);
      const llfc::ModelParams b = llfc::load_checkpoint(pair.b);
      const Splits s = build_splits(cfg);
      llfc::LayerPermutation pi;
      if (match_method == "activation") {
        pi = llfc::activation_matching(llfc::forward(a, s.train.x), llfc::forward(b, s.train.x));
      } else {
        pi = llfc::weight_matching(a, b, cfg.method.matching_seed, passes);
        if (match_method == "qap") {
          pi = llfc::qap_local_search(a, b, s.train, pi, cfg.method.matching_seed, qap_iters).perm;
        }
      }
      ensure_dir(cfg.output.directory);
      llfc::save_permutation(pi, cfg.output.directory / "perm.json");
      llfc::save_checkpoint(llfc::apply(b, pi), cfg.output.directory / "model_b_aligned.ckpt");
      std::cout << (cfg.output.directory / "perm.json").string() << '\n'
                << (cfg.output.directory / "model_b_aligned.ckpt").string() << '\n';
    } else if (sr->parsed()) {
      const llfc::ModelParams a = llfc::load_checkpoint(pair.a);
      std::optional<llfc::ModelParams> b;
      if (!pair.b.empty()) {
        b = llfc::load_checkpoint(pair.b);
        if (!pair.perm.empty()) b = llfc::apply(*b, llfc::load_permutation(pair.perm));
      }
      std::vector<llfc::NamedModel> named{{"a", &a}};
      if (b) named.push_back({"b", &*b});
      emit(cfg, {llfc::srank_table(named), llfc::spectrum_table(named)});
    } else if (run->parsed()) {
      if (c.seed) cfg.training.seed = *c.seed;
      const llfc::ExperimentResult r = llfc::run_experiment(cfg);
      for (const auto& p : r.written) std::cout << p.string() << '\n';
    } else {
      if (c.seed) cfg.dataset.seed = *c.seed;
      cfg.validate();
      const auto [a, b] = load_pair(pair);
      const Splits s = build_splits(cfg);
      const llfc::AlphaGrid grid = llfc::AlphaGrid::uniform(cfg.analysis.alpha_points);
      std::vector<llfc::Table> tables;
      if (analysis[0]->parsed()) {
        tables.push_back(llfc::curve_table(llfc::error_curve(a, b, s.eval, grid)));
      } else if (analysis[1]->parsed()) {
        const llfc::LlfcReport r = llfc::llfc_metrics(a, b, s.eval, grid);
        tables.push_back(llfc::llfc_table(r));
        tables.push_back(llfc::curve_table(r.curve));
      } else if (analysis[2]->parsed()) {
        const llfc::ConditionReport r = llfc::condition_report(a, b, s.eval, grid);
        tables.push_back(llfc::weak_additivity_table(r));
        tables.push_back(llfc::commutativity_table(r));
      } else {
        tables.push_back(llfc::stitch_table(llfc::stitch_rows(a, b, s.eval)));
      }
      emit(cfg, tables);
    }
  } catch (const std::exception& e) {
    std::cerr << "llfc: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kOk;
}

// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "llfc/experiment.hpp"

namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(
[dataset]
generator = blobs
seed = 3
n_per_class = 30
classes = 3
dim = 2
spread = 0.8

[model]
dims = 2, 8, 8, 3

[training]
optimizer = adam
learning_rate = 0.01
epochs = 4
batch_size = 16
seed = 7

[method]
kind = spawn
spawn_fraction = 0.5
seed_a = 1
seed_b = 2

[analysis]
alpha_points = 5
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Config, ParsesValuesAndDefaults) {
  const auto cfg = llfc::parse_config(kSmall);
  EXPECT_EQ(cfg.dataset.n_per_class, 30u);
  EXPECT_EQ(cfg.dims, (std::vector<std::size_t>{2, 8, 8, 3}));
  EXPECT_EQ(cfg.training.learning_rate, 0.01);
  EXPECT_EQ(cfg.training.batch_size, 16u);
  EXPECT_EQ(cfg.method.kind, llfc::MethodKind::kSpawn);
  EXPECT_EQ(cfg.analysis.alpha_points, 5u);
  EXPECT_EQ(cfg.output.formats.size(), 1u);
  EXPECT_EQ(cfg.spawn_steps(100), 50u);
}

TEST(Config, UnknownKeysAndSectionsAreErrors) {
  EXPECT_THROW(llfc::parse_config(std::string(kSmall) + "\n[extra]\nx = 1\n"), llfc::ConfigError);
  EXPECT_THROW(llfc::parse_config("[training]\nlearning_rat = 0.1\n"), llfc::ConfigError);
  EXPECT_THROW(llfc::parse_config("stray = 1\n"), llfc::ConfigError);
  EXPECT_THROW(llfc::parse_config("[training]\nepochs = ten\n"), llfc::ConfigError);
  EXPECT_THROW(llfc::parse_config("[training]\nepochs = -3\n"), llfc::ConfigError);
  EXPECT_THROW(llfc::parse_config("[analysis]\nsuites = llfc, bogus\n"), llfc::ConfigError);
  EXPECT_THROW(llfc::parse_config("[model]\ndims = 3, 4, 3\n"), llfc::ConfigError);
  EXPECT_THROW(llfc::parse_config("[dataset]\ngenerator = idx\n"), llfc::ConfigError);
  EXPECT_THROW(llfc::parse_config("[training\n"), llfc::ConfigError);
}

TEST(Config, ExactlyOneMethodVariant) {
  EXPECT_THROW(llfc::parse_config("[method]\nkind = spawn\nmatching = weight\n"), llfc::ConfigError);
  EXPECT_THROW(llfc::parse_config("[method]\nkind = independent\nk_steps = 3\n"), llfc::ConfigError);
  EXPECT_THROW(llfc::parse_config("[method]\nspawn_fraction = 0.5\nk_steps = 3\n"), llfc::ConfigError);
  EXPECT_NO_THROW(llfc::parse_config("[method]\nkind = independent\nmatching = activation\n"));
}

TEST(Config, HashTracksNumericSettingsOnly) {
  const auto a = llfc::parse_config(kSmall);
  auto b = a;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.output.directory = "elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.training.seed = 8;
  EXPECT_NE(a.hash(), b.hash());
}

TEST(RunExperiment, WritesArtifactsAndIsByteIdentical) {
  auto cfg = llfc::parse_config(kSmall);
  const fs::path root = fs::temp_directory_path() / "llfc_test_run";
  fs::remove_all(root);
  cfg.output.directory = root / "first";
  const auto r1 = llfc::run_experiment(cfg);
  cfg.output.directory = root / "second";
  llfc::run_experiment(cfg);
  for (const char* f : {"llfc.csv", "curve.csv", "weak_additivity.csv", "commutativity.csv",
                        "stitch.csv", "srank.csv", "spectrum.csv", "model_a.ckpt", "model_b.ckpt"}) {
    ASSERT_TRUE(fs::exists(root / "first" / f)) << f;
    EXPECT_EQ(slurp(root / "first" / f), slurp(root / "second" / f)) << f;
  }
  EXPECT_EQ(slurp(root / "first" / "curve.csv").rfind("# config_hash=" + r1.config_hash, 0), 0u);
}

TEST(RunExperiment, IndependentWithMatchingWritesPermutation) {
  auto cfg = llfc::parse_config(std::string(kSmall).replace(
      std::string(kSmall).find("kind = spawn\nspawn_fraction = 0.5"),
      std::string("kind = spawn\nspawn_fraction = 0.5").size(), "kind = independent\nmatching = weight"));
  cfg.analysis.suites = {"curve"};
  cfg.output.directory = fs::temp_directory_path() / "llfc_test_run_indep";
  fs::remove_all(cfg.output.directory);
  const auto r = llfc::run_experiment(cfg);
  ASSERT_TRUE(r.models.perm.has_value());
  EXPECT_TRUE(fs::exists(cfg.output.directory / "perm.json"));
  EXPECT_FALSE(fs::exists(cfg.output.directory / "llfc.csv"));
  EXPECT_TRUE(fs::exists(cfg.output.directory / "curve.csv"));
}

// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: an INI file with six sections. Every key is
// optional (defaults below) but unknown sections and keys are rejected.
//
//   [dataset]   generator = blobs | spirals | idx
//               seed, n_per_class, classes, dim, spread, noise,
//               images, labels (idx only), train_fraction
//   [model]     dims = comma list, e.g. 2,32,32,3
//   [training]  optimizer = adam | sgd, learning_rate, momentum, beta1,
//               beta2, adam_epsilon, weight_decay, batch_size, epochs, seed,
//               lr_decay_epochs (comma list), lr_decay_factor
//   [method]    kind = spawn | independent
//               spawn:       spawn_fraction or k_steps, seed_a, seed_b
//               independent: seed_a, seed_b, matching = weight|activation|none,
//                            matching_seed, matching_passes
//   [analysis]  alpha_points, suites = comma list of
//               curve,llfc,conditions,stitch,srank; eval_split = test | train
//   [output]    directory, formats = comma list of csv,json

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "llfc/errors.hpp"
#include "llfc/nn.hpp"
#include "llfc/reports.hpp"

namespace llfc {

enum class DatasetKind { kBlobs, kSpirals, kIdx };
enum class MethodKind { kSpawn, kIndependent };
enum class MatchingKind { kNone, kWeight, kActivation };

struct DatasetConfig {
  DatasetKind generator = DatasetKind::kBlobs;
  std::uint64_t seed = 0;
  std::size_t n_per_class = 333;
  std::size_t classes = 3;
  std::size_t dim = 2;
  double spread = 1.0;
  double noise = 0.0;
  std::filesystem::path images;
  std::filesystem::path labels;
  double train_fraction = 0.8;
};

struct MethodConfig {
  MethodKind kind = MethodKind::kSpawn;
  std::optional<double> spawn_fraction;
  std::optional<std::size_t> k_steps;
  std::uint64_t seed_a = 1;
  std::uint64_t seed_b = 2;
  MatchingKind matching = MatchingKind::kNone;
  std::uint64_t matching_seed = 0;
  std::size_t matching_passes = 100;
};

struct AnalysisConfig {
  std::size_t alpha_points = 21;
  std::set<std::string> suites{"curve", "llfc", "conditions", "stitch", "srank"};
  bool eval_on_test = true;
};

struct OutputConfig {
  std::filesystem::path directory = "out";
  std::vector<ReportFormat> formats{ReportFormat::kCsv};
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<std::size_t> dims{2, 32, 32, 3};
  TrainConfig training;
  MethodConfig method;
  AnalysisConfig analysis;
  OutputConfig output;

  MlpSpec spec() const { return MlpSpec{dims}; }
  bool wants(const std::string& suite) const { return analysis.suites.count(suite) > 0; }
  /// Number of shared steps before the two spawned copies diverge.
  std::size_t spawn_steps(std::size_t total_steps) const;
  void validate() const;
  /// Stable text rendering of every setting that can affect numeric output
  /// (the output block is left out).
  std::string canonical() const;
  /// 64-bit FNV-1a of canonical(), as 16 lowercase hex digits.
  std::string hash() const;
};

inline const std::set<std::string> kKnownSuites{"curve", "llfc", "conditions", "stitch", "srank"};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  }
  return out;
}

inline std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline std::size_t ExperimentConfig::spawn_steps(std::size_t total_steps) const {
  if (method.k_steps) return *method.k_steps;
  const double f = method.spawn_fraction.value_or(0.5);
  return static_cast<std::size_t>(std::llround(f * static_cast<double>(total_steps)));
}

inline void ExperimentConfig::validate() const {
  const auto& d = dataset;
  if (d.classes < 2) throw ConfigError("dataset.classes must be >= 2");
  if (d.n_per_class < 1) throw ConfigError("dataset.n_per_class must be >= 1");
  if (d.generator == DatasetKind::kBlobs && d.dim < 2) throw ConfigError("dataset.dim must be >= 2");
  if (d.generator == DatasetKind::kBlobs && !(d.spread > 0.0)) {
    throw ConfigError("dataset.spread must be > 0");
  }
  if (d.noise < 0.0) throw ConfigError("dataset.noise must be >= 0");
  if (!(d.train_fraction > 0.0 && d.train_fraction < 1.0)) {
    throw ConfigError("dataset.train_fraction must lie in (0, 1)");
  }
  if (d.generator == DatasetKind::kIdx) {
    if (d.images.empty() || d.labels.empty()) {
      throw ConfigError("dataset.images and dataset.labels are required for generator = idx");
    }
    for (const auto& p : {d.images, d.labels}) {
      if (!std::filesystem::exists(p)) throw ConfigError("dataset file does not exist: " + p.string());
    }
  }
  if (dims.size() < 2) throw ConfigError("model.dims needs at least an input and an output width");
  for (std::size_t w : dims) {
    if (w == 0) throw ConfigError("model.dims entries must be >= 1");
  }
  if (d.generator != DatasetKind::kIdx) {
    const std::size_t in = d.generator == DatasetKind::kBlobs ? d.dim : 2;
    if (dims.front() != in) {
      throw ConfigError("model.dims must start with the input dimension " + std::to_string(in));
    }
    if (dims.back() != d.classes) {
      throw ConfigError("model.dims must end with the class count " + std::to_string(d.classes));
    }
  }
  training.validate();
  if (training.epochs < 1) throw ConfigError("training.epochs must be >= 1");
  const auto& m = method;
  if (m.kind == MethodKind::kSpawn) {
    if (m.spawn_fraction && m.k_steps) {
      throw ConfigError("method: give spawn_fraction or k_steps, not both");
    }
    if (m.spawn_fraction && !(*m.spawn_fraction >= 0.0 && *m.spawn_fraction <= 1.0)) {
      throw ConfigError("method.spawn_fraction must lie in [0, 1]");
    }
  }
  if (m.matching_passes < 1) throw ConfigError("method.matching_passes must be >= 1");
  if (analysis.alpha_points < 2) throw ConfigError("analysis.alpha_points must be >= 2");
  if (output.formats.empty()) throw ConfigError("output.formats must not be empty");
}

inline std::string ExperimentConfig::canonical() const {
  std::string s;
  auto put = [&](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
  auto real = [](double v) { return format_real(v); };
  const auto& d = dataset;
  put("dataset.generator", d.generator == DatasetKind::kBlobs    ? "blobs"
                           : d.generator == DatasetKind::kSpirals ? "spirals"
                                                                  : "idx");
  put("dataset.seed", std::to_string(d.seed));
  if (d.generator == DatasetKind::kIdx) {
    put("dataset.images", d.images.string());
    put("dataset.labels", d.labels.string());
  } else {
    put("dataset.n_per_class", std::to_string(d.n_per_class));
    put("dataset.classes", std::to_string(d.classes));
    if (d.generator == DatasetKind::kBlobs) {
      put("dataset.dim", std::to_string(d.dim));
      put("dataset.spread", real(d.spread));
    } else {
      put("dataset.noise", real(d.noise));
    }
  }
  put("dataset.train_fraction", real(d.train_fraction));
  put("model.dims", detail::join_sizes(dims));
  const auto& t = training;
  put("training.optimizer", t.optimizer == OptimizerKind::kAdam ? "adam" : "sgd");
  put("training.learning_rate", real(t.learning_rate));
  put("training.momentum", real(t.momentum));
  put("training.beta1", real(t.beta1));
  put("training.beta2", real(t.beta2));
  put("training.adam_epsilon", real(t.adam_epsilon));
  put("training.weight_decay", real(t.weight_decay));
  put("training.batch_size", std::to_string(t.batch_size));
  put("training.epochs", std::to_string(t.epochs));
  put("training.seed", std::to_string(t.seed));
  put("training.lr_decay_epochs", detail::join_sizes(t.lr_decay_epochs));
  put("training.lr_decay_factor", real(t.lr_decay_factor));
  const auto& m = method;
  put("method.kind", m.kind == MethodKind::kSpawn ? "spawn" : "independent");
  if (m.kind == MethodKind::kSpawn) {
    if (m.k_steps) {
      put("method.k_steps", std::to_string(*m.k_steps));
    } else {
      put("method.spawn_fraction", real(m.spawn_fraction.value_or(0.5)));
    }
  } else {
    put("method.matching", m.matching == MatchingKind::kWeight       ? "weight"
                           : m.matching == MatchingKind::kActivation ? "activation"
                                                                     : "none");
    put("method.matching_seed", std::to_string(m.matching_seed));
    put("method.matching_passes", std::to_string(m.matching_passes));
  }
  put("method.seed_a", std::to_string(m.seed_a));
  put("method.seed_b", std::to_string(m.seed_b));
  put("analysis.alpha_points", std::to_string(analysis.alpha_points));
  std::string suites;
  for (const auto& x : analysis.suites) suites += (suites.empty() ? "" : ",") + x;
  put("analysis.suites", suites);
  put("analysis.eval_split", analysis.eval_on_test ? "test" : "train");
  return s;
}

inline std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a(canonical())));
  return buf;
}

/// Parses INI text. Throws ConfigError for syntax errors, unknown sections or
/// keys, malformed values and failed validation.
inline ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  static const std::map<std::string, std::set<std::string>> kSchema{
      {"dataset",
       {"generator", "seed", "n_per_class", "classes", "dim", "spread", "noise", "images", "labels",
        "train_fraction"}},
      {"model", {"dims"}},
      {"training",
       {"optimizer", "learning_rate", "momentum", "beta1", "beta2", "adam_epsilon", "weight_decay",
        "batch_size", "epochs", "seed", "lr_decay_epochs", "lr_decay_factor"}},
      {"method",
       {"kind", "spawn_fraction", "k_steps", "seed_a", "seed_b", "matching", "matching_seed",
        "matching_passes"}},
      {"analysis", {"alpha_points", "suites", "eval_split"}},
      {"output", {"directory", "formats"}},
  };

  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    const auto schema = kSchema.find(section);
    if (schema == kSchema.end()) {
      if (body.empty()) throw ConfigError("key '" + section + "' outside any section");
      throw ConfigError("unknown config section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      if (!schema->second.count(key)) {
        throw ConfigError("unknown config key " + section + "." + key);
      }
      const std::string full = section + "." + key;
      const std::string v = node.get_value<std::string>();
      auto uint = [&] { return detail::parse_uint(full, v); };
      auto real = [&] { return detail::parse_real(full, v); };

      if (section == "dataset") {
        auto& d = cfg.dataset;
        if (key == "generator") {
          if (v == "blobs") d.generator = DatasetKind::kBlobs;
          else if (v == "spirals") d.generator = DatasetKind::kSpirals;
          else if (v == "idx") d.generator = DatasetKind::kIdx;
          else throw ConfigError(full + ": expected blobs, spirals or idx");
        } else if (key == "seed") d.seed = uint();
        else if (key == "n_per_class") d.n_per_class = uint();
        else if (key == "classes") d.classes = uint();
        else if (key == "dim") d.dim = uint();
        else if (key == "spread") d.spread = real();
        else if (key == "noise") d.noise = real();
        else if (key == "images") d.images = v;
        else if (key == "labels") d.labels = v;
        else if (key == "train_fraction") d.train_fraction = real();
      } else if (section == "model") {
        cfg.dims.clear();
        for (const auto& x : detail::split_list(v)) cfg.dims.push_back(detail::parse_uint(full, x));
      } else if (section == "training") {
        auto& t = cfg.training;
        if (key == "optimizer") {
          if (v == "adam") t.optimizer = OptimizerKind::kAdam;
          else if (v == "sgd") t.optimizer = OptimizerKind::kSgdMomentum;
          else throw ConfigError(full + ": expected adam or sgd");
        } else if (key == "learning_rate") t.learning_rate = real();
        else if (key == "momentum") t.momentum = real();
        else if (key == "beta1") t.beta1 = real();
        else if (key == "beta2") t.beta2 = real();
        else if (key == "adam_epsilon") t.adam_epsilon = real();
        else if (key == "weight_decay") t.weight_decay = real();
        else if (key == "batch_size") t.batch_size = uint();
        else if (key == "epochs") t.epochs = uint();
        else if (key == "seed") t.seed = uint();
        else if (key == "lr_decay_factor") t.lr_decay_factor = real();
        else if (key == "lr_decay_epochs") {
          t.lr_decay_epochs.clear();
          for (const auto& x : detail::split_list(v)) {
            t.lr_decay_epochs.push_back(detail::parse_uint(full, x));
          }
        }
      } else if (section == "method") {
        auto& m = cfg.method;
        if (key == "kind") {
          if (v == "spawn") m.kind = MethodKind::kSpawn;
          else if (v == "independent") m.kind = MethodKind::kIndependent;
          else throw ConfigError(full + ": expected spawn or independent");
        } else if (key == "spawn_fraction") m.spawn_fraction = real();
        else if (key == "k_steps") m.k_steps = uint();
        else if (key == "seed_a") m.seed_a = uint();
        else if (key == "seed_b") m.seed_b = uint();
        else if (key == "matching_seed") m.matching_seed = uint();
        else if (key == "matching_passes") m.matching_passes = uint();
        else if (key == "matching") {
          if (v == "none") m.matching = MatchingKind::kNone;
          else if (v == "weight") m.matching = MatchingKind::kWeight;
          else if (v == "activation") m.matching = MatchingKind::kActivation;
          else throw ConfigError(full + ": expected weight, activation or none");
        }
      } else if (section == "analysis") {
        auto& a = cfg.analysis;
        if (key == "alpha_points") a.alpha_points = uint();
        else if (key == "eval_split") {
          if (v == "test") a.eval_on_test = true;
          else if (v == "train") a.eval_on_test = false;
          else throw ConfigError(full + ": expected test or train");
        } else if (key == "suites") {
          a.suites.clear();
          for (const auto& x : detail::split_list(v)) {
            if (!kKnownSuites.count(x)) throw ConfigError(full + ": unknown suite '" + x + "'");
            a.suites.insert(x);
          }
        }
      } else if (section == "output") {
        auto& o = cfg.output;
        if (key == "directory") o.directory = v;
        else if (key == "formats") {
          o.formats.clear();
          for (const auto& x : detail::split_list(v)) {
            if (x == "csv") o.formats.push_back(ReportFormat::kCsv);
            else if (x == "json") o.formats.push_back(ReportFormat::kJson);
            else throw ConfigError(full + ": unknown format '" + x + "'");
          }
        }
      }
    }
  }

  // Keys that belong to the other method variant are an error rather than
  // silently ignored.
  if (const auto method = tree.get_child_optional("method")) {
    const bool spawn = cfg.method.kind == MethodKind::kSpawn;
    for (const char* k : {"spawn_fraction", "k_steps"}) {
      if (!spawn && method->count(k)) {
        throw ConfigError(std::string("method.") + k + " is only valid with kind = spawn");
      }
    }
    for (const char* k : {"matching", "matching_seed", "matching_passes"}) {
      if (spawn && method->count(k)) {
        throw ConfigError(std::string("method.") + k + " is only valid with kind = independent");
      }
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace llfc

// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tabular report emission (CSV and JSON mirrors).
//
// Every CSV starts with a comment line "# config_hash=<16 hex digits>" and
// then a header row. Reals are printed with 17 significant digits; undefined
// values print as "nan" in CSV and null in JSON.
//
// Files and columns:
//   curve.csv            alpha,err
//   llfc.csv             layer,alpha,mean_one_minus_cosine_alpha,std,
//                        mean_one_minus_cosine_ab,std,mean_coef,std,excluded_count
//   weak_additivity.csv  layer,example,dist_sigma
//   commutativity.csv    layer,dist_com,dist_w,dist_h
//   stitch.csv           layer,stitch_error,error_a,error_b
//   srank.csv            model,layer,stable_rank,spectral_norm,frobenius_norm
//   spectrum.csv         model,layer,index,singular_value

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "llfc/conditions.hpp"
#include "llfc/connectivity.hpp"
#include "llfc/errors.hpp"
#include "llfc/io.hpp"

namespace llfc {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

enum class ReportFormat { kCsv, kJson };

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double or_nan(const std::optional<double>& v) { return v ? *v : std::nan(""); }

inline std::string to_csv(const Table& t, const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c) out += ',';
    out += t.columns[c];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              out += format_real(v);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
              out += std::to_string(v);
            } else {
              out += v;
            }
          },
          row[c]);
    }
    out += '\n';
  }
  return out;
}

/// {"config_hash": ..., "columns": [...], "rows": [[...], ...]}. Reals go
/// through the same 17-digit text as the CSV so both files agree exactly.
inline std::string to_json(const Table& t, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["columns"] = t.columns;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::array();
    for (const auto& cell : row) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              if (std::isfinite(v)) {
                r.push_back(std::stod(format_real(v)));
              } else {
                r.push_back(nullptr);
              }
            } else {
              r.push_back(v);
            }
          },
          cell);
    }
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(1) + "\n";
}

inline Table curve_table(const ErrorCurve& curve, const std::string& name = "curve") {
  Table t{name, {"alpha", "err"}, {}};
  for (std::size_t i = 0; i < curve.alphas.size(); ++i) {
    t.rows.push_back({curve.alphas[i], curve.errors[i]});
  }
  return t;
}

inline Table llfc_table(const LlfcReport& r) {
  Table t{"llfc",
          {"layer", "alpha", "mean_one_minus_cosine_alpha", "std", "mean_one_minus_cosine_ab",
           "std", "mean_coef", "std", "excluded_count"},
          {}};
  for (const auto& a : r.aggregates) {
    t.rows.push_back({static_cast<std::int64_t>(a.layer), a.alpha, a.mean_one_minus_cosine_alpha,
                      a.std_one_minus_cosine_alpha, a.mean_one_minus_cosine_ab,
                      a.std_one_minus_cosine_ab, a.mean_coef, a.std_coef,
                      static_cast<std::int64_t>(a.excluded_count)});
  }
  return t;
}

inline Table weak_additivity_table(const ConditionReport& r) {
  Table t{"weak_additivity", {"layer", "example", "dist_sigma"}, {}};
  for (const auto& layer : r.weak_additivity) {
    for (std::size_t i = 0; i < layer.dist_sigma.size(); ++i) {
      t.rows.push_back({static_cast<std::int64_t>(layer.layer), static_cast<std::int64_t>(i),
                        or_nan(layer.dist_sigma[i])});
    }
  }
  return t;
}

inline Table commutativity_table(const ConditionReport& r) {
  Table t{"commutativity", {"layer", "dist_com", "dist_w", "dist_h"}, {}};
  for (const auto& c : r.commutativity) {
    t.rows.push_back({static_cast<std::int64_t>(c.layer), or_nan(c.dist_com), or_nan(c.dist_w),
                      or_nan(c.dist_h)});
  }
  return t;
}

struct StitchRow {
  std::size_t layer = 0;
  double stitch_error = 0.0;
  double error_a = 0.0;
  double error_b = 0.0;
};

inline std::vector<StitchRow> stitch_rows(const ModelParams& a, const ModelParams& b,
                                          const Dataset& data) {
  const double ea = classification_error(a, data);
  const double eb = classification_error(b, data);
  std::vector<StitchRow> rows;
  for (std::size_t l = 1; l < a.num_layers(); ++l) {
    rows.push_back({l, stitch_error(a, b, l, data), ea, eb});
  }
  return rows;
}

inline Table stitch_table(const std::vector<StitchRow>& rows) {
  Table t{"stitch", {"layer", "stitch_error", "error_a", "error_b"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({static_cast<std::int64_t>(r.layer), r.stitch_error, r.error_a, r.error_b});
  }
  return t;
}

struct NamedModel {
  std::string name;
  const ModelParams* params;
};

inline Table srank_table(const std::vector<NamedModel>& models) {
  Table t{"srank", {"model", "layer", "stable_rank", "spectral_norm", "frobenius_norm"}, {}};
  for (const auto& m : models) {
    for (std::size_t l = 0; l < m.params->num_layers(); ++l) {
      const Matrix& w = m.params->weights[l];
      if (is_zero(w.data())) {
        t.rows.push_back({m.name, static_cast<std::int64_t>(l + 1), std::nan(""), 0.0, 0.0});
        continue;
      }
      t.rows.push_back({m.name, static_cast<std::int64_t>(l + 1), stable_rank(w), spectral_norm(w),
                        frobenius_norm(w)});
    }
  }
  return t;
}

inline Table spectrum_table(const std::vector<NamedModel>& models) {
  Table t{"spectrum", {"model", "layer", "index", "singular_value"}, {}};
  for (const auto& m : models) {
    for (std::size_t l = 0; l < m.params->num_layers(); ++l) {
      const auto s = singular_spectrum(m.params->weights[l]);
      for (std::size_t k = 0; k < s.size(); ++k) {
        t.rows.push_back({m.name, static_cast<std::int64_t>(l + 1), static_cast<std::int64_t>(k), s[k]});
      }
    }
  }
  return t;
}

/// Writes each table as <dir>/<name>.csv and/or .json. An empty list writes
/// nothing. Returns the paths written.
inline std::vector<std::filesystem::path> emit_reports(const std::vector<Table>& tables,
                                                       const std::filesystem::path& dir,
                                                       const std::vector<ReportFormat>& formats,
                                                       const std::string& config_hash) {
  std::vector<std::filesystem::path> written;
  if (tables.empty()) return written;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
  for (const auto& t : tables) {
    for (ReportFormat f : formats) {
      const bool csv = f == ReportFormat::kCsv;
      const auto path = dir / (t.name + (csv ? ".csv" : ".json"));
      write_file_atomic(path, csv ? to_csv(t, config_hash) : to_json(t, config_hash));
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace llfc

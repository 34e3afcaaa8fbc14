// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Persistence for checkpoints and permutations.
//
// Checkpoint layout (all integers little-endian):
//   "LLFC"            4 bytes magic
//   version  u32      currently 1
//   L        u32      number of weight layers
//   dims     u32[L+1] d_0 .. d_L
//   per layer l = 1..L: W^(l) row-major, then b^(l); IEEE-754 binary64 LE
//
// Permutation files are JSON: an array with one array of 0-based indices
// per hidden layer.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "llfc/errors.hpp"
#include "llfc/nn.hpp"
#include "llfc/permutation.hpp"

namespace llfc {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Writes `contents` to a temporary sibling of `path` and renames it into
/// place, so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace detail {

inline void put_le32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

inline void put_le64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      v |= std::uint32_t{static_cast<unsigned char>(bytes_[pos_ + k])} << (8 * k);
    }
    pos_ += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) {
      v |= std::uint64_t{static_cast<unsigned char>(bytes_[pos_ + k])} << (8 * k);
    }
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated checkpoint while reading ") + what, pos_);
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const ModelParams& params) {
  params.validate();
  const MlpSpec spec = params.spec();
  std::string out = "LLFC";
  detail::put_le32(out, kCheckpointVersion);
  detail::put_le32(out, static_cast<std::uint32_t>(spec.num_layers()));
  for (std::size_t d : spec.dims) detail::put_le32(out, static_cast<std::uint32_t>(d));
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    for (double v : params.weights[l].data()) detail::put_le64(out, std::bit_cast<std::uint64_t>(v));
    for (double v : params.biases[l]) detail::put_le64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

inline ModelParams decode_checkpoint(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.take(4, "magic") != "LLFC") throw FormatError("bad checkpoint magic", 0);
  const std::size_t version_at = r.pos();
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw UnsupportedVersionError("unsupported checkpoint version " + std::to_string(version),
                                  version_at);
  }
  const std::size_t layers_at = r.pos();
  const std::uint32_t layers = r.u32("layer count");
  if (layers == 0) throw FormatError("checkpoint has zero layers", layers_at);
  // Each layer needs at least 4 bytes of dims; reject absurd counts early.
  if (layers > r.remaining() / 4) throw FormatError("layer count exceeds file size", layers_at);
  std::vector<std::size_t> dims;
  for (std::uint32_t i = 0; i <= layers; ++i) {
    const std::size_t at = r.pos();
    const std::uint32_t d = r.u32("dims");
    if (d == 0) throw FormatError("zero layer width", at);
    dims.push_back(d);
  }
  std::size_t values = 0;
  for (std::size_t l = 1; l <= layers; ++l) values += dims[l] * dims[l - 1] + dims[l];
  if (values > r.remaining() / 8) {
    throw FormatError("truncated checkpoint: parameters need " + std::to_string(values * 8) +
                          " bytes, " + std::to_string(r.remaining()) + " available",
                      r.pos());
  }
  ModelParams p;
  for (std::size_t l = 1; l <= layers; ++l) {
    std::vector<double> w(dims[l] * dims[l - 1]);
    for (double& v : w) v = r.f64("weights");
    p.weights.emplace_back(dims[l], dims[l - 1], std::move(w));
    Vector b(dims[l]);
    for (double& v : b) v = r.f64("biases");
    p.biases.push_back(std::move(b));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint", r.pos());
  return p;
}

inline void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(params));
}

inline ModelParams load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

inline nlohmann::json permutation_to_json(const LayerPermutation& pi) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : pi.perms) j.push_back(p);
  return j;
}

/// Parses and re-validates bijectivity of every layer.
inline LayerPermutation permutation_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("permutation JSON must be an array of arrays");
  LayerPermutation pi;
  for (const auto& layer : j) {
    if (!layer.is_array()) throw ValidationError("permutation layer must be an array");
    Permutation p;
    for (const auto& v : layer) {
      if (!v.is_number_unsigned()) throw ValidationError("permutation index must be a non-negative integer");
      p.push_back(v.get<std::size_t>());
    }
    pi.perms.push_back(std::move(p));
  }
  pi.validate();
  return pi;
}

inline void save_permutation(const LayerPermutation& pi, const std::filesystem::path& path) {
  write_file_atomic(path, permutation_to_json(pi).dump() + "\n");
}

inline LayerPermutation load_permutation(const std::filesystem::path& path) {
  const std::string text = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("permutation file is not valid JSON: ") + e.what());
  }
  return permutation_from_json(j);
}

}  // namespace llfc

// Copyright 2026 The llfc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "llfc/io.hpp"
#include "llfc/reports.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("llfc_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Checkpoint, HandEncodedLayout) {
  llfc::ModelParams p;
  p.weights.push_back(llfc::Matrix::from_rows({{1.0, -2.0}}));
  p.biases.push_back({0.5});
  const std::string bytes = llfc::encode_checkpoint(p);
  // magic, version 1, L = 1, dims 2 and 1, then 3 doubles.
  ASSERT_EQ(bytes.size(), 4u + 4 + 4 + 8 + 24);
  EXPECT_EQ(bytes.substr(0, 4), "LLFC");
  const unsigned char header[] = {1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0};
  EXPECT_EQ(std::memcmp(bytes.data() + 4, header, sizeof header), 0);
  // -2.0 is 0xC000000000000000; little-endian puts 0xC0 last.
  const unsigned char minus_two[] = {0, 0, 0, 0, 0, 0, 0, 0xC0};
  EXPECT_EQ(std::memcmp(bytes.data() + 28, minus_two, 8), 0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  std::mt19937_64 gen(1);
  const auto p = oracle::random_params(gen, {3, 7, 2});
  const auto dir = temp_dir("ckpt");
  llfc::save_checkpoint(p, dir / "m.ckpt");
  const auto q = llfc::load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(p, q);
  const auto x = oracle::random_matrix(gen, 3, 4);
  EXPECT_EQ(llfc::forward(p, x).output(), llfc::forward(q, x).output());
  EXPECT_FALSE(fs::exists(dir / "m.ckpt.tmp"));
}

TEST(Checkpoint, MalformedInputs) {
  std::mt19937_64 gen(2);
  const std::string good = llfc::encode_checkpoint(oracle::random_params(gen, {2, 3, 2}));
  EXPECT_THROW(llfc::decode_checkpoint(good.substr(0, good.size() - 1)), llfc::FormatError);
  EXPECT_THROW(llfc::decode_checkpoint(good.substr(0, 10)), llfc::FormatError);
  EXPECT_THROW(llfc::decode_checkpoint(good + "x"), llfc::FormatError);
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  try {
    llfc::decode_checkpoint(bad_magic);
    FAIL();
  } catch (const llfc::FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  std::string v99 = good;
  v99[4] = 99;
  try {
    llfc::decode_checkpoint(v99);
    FAIL();
  } catch (const llfc::UnsupportedVersionError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
  EXPECT_THROW(llfc::load_checkpoint(temp_dir("none") / "absent"), llfc::IoError);
}

TEST(PermutationFile, RoundTripAndValidation) {
  const auto dir = temp_dir("perm");
  std::mt19937_64 gen(3);
  const auto id = llfc::LayerPermutation::identity(llfc::MlpSpec{{2, 4, 3, 2}});
  llfc::save_permutation(id, dir / "id.json");
  EXPECT_EQ(llfc::load_permutation(dir / "id.json"), id);
  const auto pi = oracle::random_layer_perm(gen, {2, 9, 6, 2});
  llfc::save_permutation(pi, dir / "r.json");
  EXPECT_EQ(llfc::load_permutation(dir / "r.json"), pi);
  std::ofstream(dir / "dup.json") << "[[0, 1, 1]]";
  EXPECT_THROW(llfc::load_permutation(dir / "dup.json"), llfc::ValidationError);
  std::ofstream(dir / "neg.json") << "[[0, -1]]";
  EXPECT_THROW(llfc::load_permutation(dir / "neg.json"), llfc::ValidationError);
  std::ofstream(dir / "junk.json") << "[[0, 1";
  EXPECT_THROW(llfc::load_permutation(dir / "junk.json"), llfc::ValidationError);
}

TEST(Reports, LlfcHeaderAndCurveRows) {
  const auto dir = temp_dir("reports");
  llfc::LlfcReport r;
  r.aggregates.push_back({1, 0.5, 0.1, 0.01, 0.3, 0.02, 1.0, 0.0, 2});
  llfc::ErrorCurve c;
  c.alphas = {0.0, 0.5, 1.0};
  c.errors = {0.1, 0.2, 0.3};
  const auto written = llfc::emit_reports({llfc::llfc_table(r), llfc::curve_table(c)}, dir,
                                          {llfc::ReportFormat::kCsv, llfc::ReportFormat::kJson},
                                          "0123456789abcdef");
  EXPECT_EQ(written.size(), 4u);
  const std::string llfc_csv = slurp(dir / "llfc.csv");
  EXPECT_EQ(llfc_csv,
            "# config_hash=0123456789abcdef\n"
            "layer,alpha,mean_one_minus_cosine_alpha,std,mean_one_minus_cosine_ab,std,mean_coef,std,"
            "excluded_count\n"
            "1,0.5,0.10000000000000001,0.01,0.29999999999999999,0.02,1,0,2\n");
  EXPECT_EQ(slurp(dir / "curve.csv"),
            "# config_hash=0123456789abcdef\nalpha,err\n0,0.10000000000000001\n"
            "0.5,0.20000000000000001\n1,0.29999999999999999\n");
  const auto j = nlohmann::json::parse(slurp(dir / "curve.json"));
  EXPECT_EQ(j["columns"][1], "err");
  EXPECT_EQ(j["rows"][2][1].get<double>(), 0.3);
}

TEST(Reports, EmptyListWritesNothingAndNanIsNull) {
  const auto dir = temp_dir("empty");
  EXPECT_TRUE(llfc::emit_reports({}, dir / "sub", {llfc::ReportFormat::kCsv}, "h").empty());
  EXPECT_FALSE(fs::exists(dir / "sub"));
  llfc::Table t{"t", {"v"}, {{std::nan("")}}};
  EXPECT_EQ(llfc::to_csv(t, "h"), "# config_hash=h\nv\nnan\n");
  EXPECT_TRUE(nlohmann::json::parse(llfc::to_json(t, "h"))["rows"][0][0].is_null());
}

TEST(Reports, UnwritableDirectory) {
  const auto dir = temp_dir("blocked");
  std::ofstream(dir / "file") << "x";
  llfc::Table t{"t", {"v"}, {{1.0}}};
  EXPECT_THROW(llfc::emit_reports({t}, dir / "file" / "sub", {llfc::ReportFormat::kCsv}, "h"),
               llfc::IoError);
}

#include <gtest/gtest.h>

#include <filesystem>

#include "greensurrogate/checkpoint.hpp"
#include "greensurrogate/error.hpp"
#include "greensurrogate/field_io.hpp"

using namespace gsurr;

namespace {

Checkpoint sample_checkpoint() {
  UNetConfig c;
  c.in_channels = 2;
  c.first_channels = 3;
  c.depth = 2;
  c.n = 8;
  c.m = 12;
  Checkpoint ck;
  ck.params = init_unet(c, 4);
  ck.problem.domain = {-1.0, -0.5, 2.0, 1.5};
  ck.problem.coeffs = "custom";
  ck.problem.coeffs_a = "1 + x1^2";
  ck.problem.coeffs_r = "0.5";
  ck.problem.source.sigma_factor = 1.25;
  ck.problem.source.seed = 77;
  ck.problem.variant = InputVariant::distance_rho;
  ck.training.epoch = 12;
  ck.training.k_schedule = update_k(make_k_schedule(KStrategy::adaptive), 0.25);
  ck.training.seed = 9;
  ck.training.val_metric = 1.0 / 3.0;
  return ck;
}

void expect_kind(const std::string& bytes, ErrorKind kind) {
  try {
    decode_checkpoint(bytes);
    FAIL() << "accepted corrupt checkpoint";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind);
  }
}

}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
  const Checkpoint ck = sample_checkpoint();
  const std::string bytes = encode_checkpoint(ck);
  EXPECT_EQ(bytes.substr(0, 4), "GSUN");
  EXPECT_TRUE(decode_checkpoint(bytes) == ck);
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);

  const auto path = std::filesystem::temp_directory_path() / "gsurr_test_ckpt.gsun";
  save_checkpoint(path, ck);
  EXPECT_TRUE(load_checkpoint(path) == ck);
  EXPECT_TRUE(load_checkpoint(path, ck.params.config) == ck);
}

TEST(Checkpoint, RejectsCorruption) {
  const std::string bytes = encode_checkpoint(sample_checkpoint());
  expect_kind(bytes.substr(0, bytes.size() - 8), ErrorKind::io);
  expect_kind(bytes.substr(0, 10), ErrorKind::io);
  expect_kind(bytes + std::string(1, '\0'), ErrorKind::io);
  expect_kind("XSUN" + bytes.substr(4), ErrorKind::io);
  std::string wrong_version = bytes;
  wrong_version[4] = 2;
  expect_kind(wrong_version, ErrorKind::io);
}

TEST(Checkpoint, ConfigMismatchIsConfigError) {
  const Checkpoint ck = sample_checkpoint();
  const auto path = std::filesystem::temp_directory_path() / "gsurr_test_ckpt_mismatch.gsun";
  save_checkpoint(path, ck);
  UNetConfig other = ck.params.config;
  other.first_channels = 4;
  try {
    load_checkpoint(path, other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(Checkpoint, MissingFile) {
  try {
    load_checkpoint("/nonexistent/x.gsun");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "greensurrogate/error.hpp"
#include "greensurrogate/field_io.hpp"
#include "greensurrogate/grid.hpp"

using namespace gsurr;

namespace {
const RectDomain kSquare{-1.0, -1.0, 2.0, 2.0};

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gsurr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}
}  // namespace

TEST(Grid, SpacingAndEndpoints) {
  const Grid g = build_grid(kSquare, 64, 64);
  EXPECT_DOUBLE_EQ(g.h1(), 2.0 / 63.0);
  EXPECT_DOUBLE_EQ(g.h2(), 2.0 / 63.0);
  EXPECT_EQ(g.x(0), -1.0);
  EXPECT_EQ(g.x(63), 1.0);
  EXPECT_EQ(g.y(63), 1.0);
  EXPECT_EQ(g.size(), 4096u);
}

TEST(Grid, Anisotropic) {
  const Grid g = build_grid(RectDomain{0.0, 0.0, 3.0, 1.0}, 31, 11);
  EXPECT_DOUBLE_EQ(g.h1(), 0.1);
  EXPECT_DOUBLE_EQ(g.h2(), 0.1);
  EXPECT_EQ(g.index(2, 1), 33u);
}

TEST(Grid, SmallestGridHasOneInteriorNode) {
  const Grid g = build_grid(kSquare, 3, 3);
  int interior = 0;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) interior += !g.is_boundary(i, j);
  EXPECT_EQ(interior, 1);
  EXPECT_EQ(g.node(1, 1), (Point{0.0, 0.0}));
}

TEST(Grid, RejectsDegenerateInput) {
  EXPECT_THROW(build_grid(kSquare, 2, 5), Error);
  EXPECT_THROW(build_grid(kSquare, 5, 2), Error);
  EXPECT_THROW(build_grid(RectDomain{0, 0, 0.0, 1.0}, 5, 5), Error);
  EXPECT_THROW(build_grid(RectDomain{0, 0, 1.0, -1.0}, 5, 5), Error);
}

TEST(Field, BoundaryHelpers) {
  const Grid g = build_grid(kSquare, 5, 4);
  Field f(g, 1.0);
  EXPECT_FALSE(f.boundary_is_zero());
  f.zero_boundary();
  EXPECT_TRUE(f.boundary_is_zero());
  EXPECT_EQ(f(2, 1), 1.0);
  EXPECT_EQ(f(4, 2), 0.0);
  EXPECT_TRUE(f.all_finite());
  f(2, 2) = std::nan("");
  EXPECT_FALSE(f.all_finite());
}

TEST(Field, L2ErrorIsMeshWeighted) {
  const Grid g = build_grid(kSquare, 5, 5);
  const Field a(g, 0.0), b(g, 1.0);
  // sqrt(h1 h2 * 25) with h = 0.5
  EXPECT_DOUBLE_EQ(l2_error(a, b), std::sqrt(0.25 * 25.0));
  EXPECT_DOUBLE_EQ(l2_norm(b), l2_error(a, b));
  EXPECT_EQ(l2_error(b, b), 0.0);
  EXPECT_EQ(max_abs_diff(a, b), 1.0);
  EXPECT_THROW(l2_error(a, Field(build_grid(kSquare, 6, 5))), Error);
}

TEST(FieldIo, RoundTripIsBitwise) {
  const Grid g = build_grid(RectDomain{-1.0, -0.5, 2.0, 1.0}, 7, 5);
  Field f(g);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::sin(0.7 * static_cast<double>(k)) * 1e-3 + 1.0 / 3.0;
  const Field back = decode_fgf(encode_fgf(f));
  EXPECT_TRUE(back == f);
  EXPECT_EQ(back.grid().domain(), g.domain());

  const auto dir = temp_dir("fgf");
  write_fgf(dir / "f.fgf", f);
  EXPECT_TRUE(read_fgf(dir / "f.fgf") == f);
  for (const auto& e : std::filesystem::directory_iterator(dir)) EXPECT_EQ(e.path().filename(), "f.fgf");
}

TEST(FieldIo, HeaderFormat) {
  const Grid g = build_grid(kSquare, 3, 4);
  const std::string bytes = encode_fgf(Field(g, 2.0));
  EXPECT_EQ(bytes.substr(0, 5), "FGF1 ");
  const auto nl = bytes.find('\n');
  EXPECT_EQ(bytes.size() - nl - 1, 12 * sizeof(double));
}

TEST(FieldIo, RejectsCorruptInput) {
  const Grid g = build_grid(kSquare, 4, 4);
  const std::string good = encode_fgf(Field(g, 1.0));
  auto expect_io = [](const std::string& bytes) {
    try {
      decode_fgf(bytes);
      FAIL() << "accepted corrupt bytes";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::io);
    }
  };
  expect_io(good.substr(0, good.size() - 3));
  expect_io(good + "x");
  expect_io("FGF2" + good.substr(4));
  expect_io("garbage");
  std::string nan_payload = good;
  const double nan = std::nan("");
  std::memcpy(nan_payload.data() + nan_payload.size() - sizeof(double), &nan, sizeof(double));
  expect_io(nan_payload);
}

TEST(FieldIo, MissingFileIsIoError) {
  try {
    read_fgf("/nonexistent/dir/x.fgf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}

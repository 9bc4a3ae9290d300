#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "greensurrogate/error.hpp"
#include "greensurrogate/source.hpp"
#include "greensurrogate/unet.hpp"
#include "oracles.hpp"

using namespace gsurr;

namespace {

const RectDomain kSquare{-1.0, -1.0, 2.0, 2.0};

UNetConfig tiny(int cin, int c1, int depth, int n, int m) {
  UNetConfig c;
  c.in_channels = cin;
  c.first_channels = c1;
  c.depth = depth;
  c.n = n;
  c.m = m;
  return c;
}

InputTensor random_input(const Grid& g, int channels, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  InputTensor t{g, channels, std::vector<double>(g.size() * static_cast<std::size_t>(channels))};
  for (double& v : t.data) v = nd(rng);
  return t;
}

UNetParams perturbed_init(const UNetConfig& c, std::uint64_t seed, std::mt19937_64& rng) {
  // zero biases make ReLU ties at exactly 0 likely; jitter them
  UNetParams p = init_unet(c, seed);
  std::normal_distribution<double> nd(0.0, 0.05);
  for (double& v : p.values) v += nd(rng);
  return p;
}

double dot(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

TEST(UNetConfig, Validation) {
  EXPECT_NO_THROW(tiny(1, 32, 4, 64, 64).validate());
  EXPECT_THROW(tiny(1, 32, 4, 60, 64).validate(), Error);  // 60 not divisible by 8
  EXPECT_THROW(tiny(0, 4, 2, 8, 8).validate(), Error);
  EXPECT_THROW(tiny(1, 0, 2, 8, 8).validate(), Error);
  EXPECT_THROW(tiny(1, 4, 0, 8, 8).validate(), Error);
  EXPECT_THROW(tiny(1, 4, 1, 8, 8).validate(), Error);
}

TEST(UNet, ParamCountMatchesLayerShapes) {
  for (auto [cin, c1, d] : {std::tuple{1, 32, 4}, {1, 8, 3}, {3, 4, 2}, {2, 16, 5}}) {
    EXPECT_EQ(param_count(tiny(cin, c1, d, 64, 64)), oracle::unet_params(cin, c1, d)) << c1 << "/" << d;
  }
  // paper's C1=32, D=4 network is in the low millions
  const std::size_t big = param_count(tiny(1, 32, 4, 64, 64));
  EXPECT_GT(big, 1'000'000u);
  EXPECT_LT(big, 10'000'000u);
}

TEST(UNet, LayerTableIsContiguous) {
  const UNet net(tiny(1, 4, 3, 16, 16));
  std::size_t next = 0;
  for (const LayerSpec& l : net.layers()) {
    EXPECT_EQ(l.weight_offset, next) << l.name;
    EXPECT_EQ(l.bias_offset, l.weight_offset + l.weight_count) << l.name;
    next = l.bias_offset + l.bias_count;
  }
  EXPECT_EQ(next, net.param_count());
  EXPECT_EQ(net.layers().back().kind, LayerKind::conv1x1);
}

TEST(UNet, InitIsDeterministicAndBounded) {
  const UNetConfig c = tiny(1, 4, 3, 16, 16);
  const UNetParams a = init_unet(c, 9), b = init_unet(c, 9), other = init_unet(c, 10);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == other);
  const UNet net(c);
  for (const LayerSpec& l : net.layers()) {
    const double fan_in = l.kind == LayerKind::conv3x3 ? 9.0 * l.in_channels : l.in_channels;
    const double bound = std::sqrt((l.kind == LayerKind::conv3x3 ? 6.0 : 3.0) / fan_in);
    for (std::size_t k = 0; k < l.weight_count; ++k) EXPECT_LE(std::abs(a.values[l.weight_offset + k]), bound);
    for (std::size_t k = 0; k < l.bias_count; ++k) EXPECT_EQ(a.values[l.bias_offset + k], 0.0);
  }
}

TEST(UNet, ForwardMatchesNaiveOracle) {
  std::mt19937_64 rng(21);
  for (auto [cin, c1, d, n, m] : {std::tuple{1, 2, 2, 8, 8}, {3, 3, 3, 16, 12}, {2, 2, 2, 6, 10}, {1, 2, 4, 16, 16}}) {
    const UNetConfig c = tiny(cin, c1, d, n, m);
    const Grid g = build_grid(kSquare, n, m);
    const UNetParams p = perturbed_init(c, 1, rng);
    const InputTensor in = random_input(g, cin, rng);
    const Field out = forward(p, in);

    oracle::Tensor t(cin, m, n);
    t.v = in.data;
    oracle::NaiveUNet naive(p.values);
    const oracle::Tensor expected = naive.run(t, c1, d);
    EXPECT_EQ(naive.consumed(), p.values.size());
    double worst = 0.0;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(out(i, j) - expected.at(0, j, i)));
    EXPECT_LT(worst, 1e-12) << cin << "/" << c1 << "/" << d;
  }
}

TEST(UNet, InitialOutputIsModest) {
  const RectDomain d = kSquare;
  for (auto [cin, c1, depth, n] : {std::tuple{1, 8, 3, 32}, {3, 8, 3, 32}, {1, 32, 4, 64}}) {
    const UNetConfig c = tiny(cin, c1, depth, n, n);
    const Grid g = build_grid(d, n, n);
    SourceConfig src;
    for (std::uint64_t seed : {0u, 1u, 2u}) {
      const Field out = forward(init_unet(c, seed), build_input(g, {0.1, -0.2}, input_variant_from_int(cin), src));
      double sum = 0.0;
      for (double v : out.values()) {
        ASSERT_TRUE(std::isfinite(v));
        sum += v * v;
      }
      EXPECT_LT(std::sqrt(sum / static_cast<double>(out.size())), 10.0) << cin << "/" << c1 << "/" << depth;
    }
  }
}

TEST(UNet, BoundaryIsExactlyZero) {
  std::mt19937_64 rng(4);
  const UNetConfig c = tiny(2, 3, 3, 16, 16);
  const Grid g = build_grid(kSquare, 16, 16);
  for (int t = 0; t < 5; ++t) {
    UNetParams p = perturbed_init(c, static_cast<std::uint64_t>(t), rng);
    for (double& v : p.values) v *= 10.0;
    EXPECT_TRUE(forward(p, random_input(g, 2, rng)).boundary_is_zero());
  }
}

TEST(UNet, WorkspaceReuseIsStateless) {
  std::mt19937_64 rng(8);
  const UNetConfig c = tiny(1, 2, 3, 16, 16);
  const Grid g = build_grid(kSquare, 16, 16);
  const UNet net(c);
  const UNetParams p = perturbed_init(c, 2, rng);
  const InputTensor a = random_input(g, 1, rng), b = random_input(g, 1, rng);
  auto ws = net.make_workspace();
  const Field fa = net.forward(p, a, *ws);
  net.forward(p, b, *ws);
  EXPECT_TRUE(net.forward(p, a, *ws) == fa);
  EXPECT_TRUE(forward(p, a) == fa);
}

TEST(UNet, RejectsMismatchedInputs) {
  const UNetConfig c = tiny(1, 2, 2, 8, 8);
  const UNetParams p = init_unet(c, 0);
  std::mt19937_64 rng(1);
  EXPECT_THROW(forward(p, random_input(build_grid(kSquare, 8, 8), 2, rng)), Error);
  EXPECT_THROW(forward(p, random_input(build_grid(kSquare, 16, 8), 1, rng)), Error);
  UNetParams short_params = p;
  short_params.values.pop_back();
  EXPECT_THROW(forward(short_params, random_input(build_grid(kSquare, 8, 8), 1, rng)), Error);
}

TEST(UNet, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  for (auto [cin, c1, d, n] : {std::tuple{1, 2, 2, 8}, {3, 2, 3, 16}, {2, 3, 2, 8}}) {
    const UNetConfig c = tiny(cin, c1, d, n, n);
    const Grid g = build_grid(kSquare, n, n);
    const UNetParams p = perturbed_init(c, 5, rng);
    const InputTensor in = random_input(g, cin, rng);
    Field upstream(g);
    for (double& v : upstream.values()) v = nd(rng);
    const std::vector<double> grad = gradient(p, in, upstream);
    EXPECT_EQ(grad.size(), p.values.size());

    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      std::vector<double> dir(p.values.size());
      for (double& v : dir) v = nd(rng);
      auto f = [&](double s) {
        UNetParams q = p;
        for (std::size_t k = 0; k < dir.size(); ++k) q.values[k] += s * dir[k];
        return dot(forward(q, in), upstream);
      };
      const double eps = 1e-6;
      const double fd = (f(eps) - f(-eps)) / (2.0 * eps);
      double an = 0.0;
      for (std::size_t k = 0; k < dir.size(); ++k) an += grad[k] * dir[k];
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(fd), 1e-12));
    }
    EXPECT_LE(worst, 1e-4) << cin << "/" << c1 << "/" << d;
  }
}

TEST(UNet, GradientIgnoresUpstreamOnBoundary) {
  std::mt19937_64 rng(3);
  const UNetConfig c = tiny(1, 2, 2, 8, 8);
  const Grid g = build_grid(kSquare, 8, 8);
  const UNetParams p = perturbed_init(c, 1, rng);
  const InputTensor in = random_input(g, 1, rng);
  Field upstream(g, 0.0);
  for (int i = 0; i < 8; ++i) upstream(i, 0) = 1.0;
  for (double v : gradient(p, in, upstream)) EXPECT_EQ(v, 0.0);
}

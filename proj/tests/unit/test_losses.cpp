#include <gtest/gtest.h>

#include <random>

#include "greensurrogate/error.hpp"
#include "greensurrogate/losses.hpp"
#include "greensurrogate/source.hpp"
#include "oracles.hpp"

using namespace gsurr;

namespace {

const RectDomain kSquare{-1.0, -1.0, 2.0, 2.0};

struct Fixture {
  Grid grid = build_grid(kSquare, 9, 9);
  CoefficientSpec coeffs = rd1_coefficients();
  StencilCoeffs stencil = assemble_stencil(grid, coeffs);
};

double sq_dist(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

}  // namespace

TEST(Losses, ResidualMatchesDenseOracle) {
  Fixture s;
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd A = oracle::dense_operator(s.grid, s.coeffs.a, s.coeffs.r);
  std::vector<Field> G, rho;
  double expected = 0.0;
  for (int b = 0; b < 3; ++b) {
    G.push_back(oracle::random_interior_field(s.grid, rng));
    rho.push_back(gaussian_source(s.grid, {0.1 * b, -0.1 * b}, 0.3));
    expected += (A * oracle::interior_vector(G.back()) - oracle::interior_vector(rho.back())).squaredNorm();
  }
  EXPECT_NEAR(loss_residual(s.stencil, G, rho), expected, 1e-10 * expected);
}

TEST(Losses, JacobiWithOneSweep) {
  Fixture s;
  std::mt19937_64 rng(2);
  const Field G = oracle::random_interior_field(s.grid, rng);
  const Field rho = gaussian_source(s.grid, {0.0, 0.0}, 0.3);
  const Field target = jacobi_step(s.stencil, G, rho);
  EXPECT_DOUBLE_EQ(loss_jacobi(s.stencil, std::span(&G, 1), std::span(&rho, 1), 1), sq_dist(G, target));
}

TEST(Losses, ZeroAtTheDiscreteSolution) {
  Fixture s;
  const Field rho = gaussian_source(s.grid, {0.2, 0.3}, 0.3);
  const Field G = direct_solve(s.stencil, rho);
  EXPECT_LT(loss_residual(s.stencil, std::span(&G, 1), std::span(&rho, 1)), 1e-20);
  EXPECT_LT(loss_jacobi(s.stencil, std::span(&G, 1), std::span(&rho, 1), 5), 1e-24);
  EXPECT_EQ(loss_data(std::span(&G, 1), std::span(&G, 1)), 0.0);
}

TEST(Losses, JacobiApproachesDataLossForLargeK) {
  Fixture s;
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const Field G = oracle::random_interior_field(s.grid, rng);
    const Field rho = gaussian_source(s.grid, {0.25 * (t - 2), 0.1}, 0.3);
    const Field ref = direct_solve(s.stencil, rho);
    const double lj = loss_jacobi(s.stencil, std::span(&G, 1), std::span(&rho, 1), 10000);
    const double ld = loss_data(std::span(&G, 1), std::span(&ref, 1));
    EXPECT_LE(std::abs(lj - ld), 1e-10);
  }
}

TEST(Losses, ResidualGradientMatchesFiniteDifferences) {
  Fixture s;
  std::mt19937_64 rng(4);
  const Field G = oracle::random_interior_field(s.grid, rng);
  const Field rho = gaussian_source(s.grid, {0.0, 0.0}, 0.3);
  Field dG;
  const SampleLoss l = sample_loss_and_grad(LossKind::residual, s.stencil, G, rho, nullptr, 0, dG);
  EXPECT_DOUBLE_EQ(l.value, loss_residual(s.stencil, std::span(&G, 1), std::span(&rho, 1)));
  for (int j = 1; j < 8; ++j)
    for (int i = 1; i < 8; ++i) {
      const double eps = 1e-5;
      Field gp = G, gm = G;
      gp(i, j) += eps;
      gm(i, j) -= eps;
      const double fd = (loss_residual(s.stencil, std::span(&gp, 1), std::span(&rho, 1)) -
                         loss_residual(s.stencil, std::span(&gm, 1), std::span(&rho, 1))) /
                        (2 * eps);
      EXPECT_NEAR(dG(i, j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(Losses, JacobiGradientTreatsTargetAsConstant) {
  Fixture s;
  std::mt19937_64 rng(5);
  const Field G = oracle::random_interior_field(s.grid, rng);
  const Field rho = gaussian_source(s.grid, {0.0, 0.0}, 0.3);
  Field dG;
  const SampleLoss l = sample_loss_and_grad(LossKind::jacobi, s.stencil, G, rho, nullptr, 3, dG);
  const Field target = jacobi_solve(s.stencil, rho, G, FixedSweeps{3}).field;
  EXPECT_EQ(l.jacobi_sweeps, 3);
  EXPECT_DOUBLE_EQ(l.value, sq_dist(G, target));
  for (std::size_t k = 0; k < G.size(); ++k) EXPECT_DOUBLE_EQ(dG[k], 2.0 * (G[k] - target[k]));
}

TEST(Losses, DataGradient) {
  Fixture s;
  std::mt19937_64 rng(6);
  const Field G = oracle::random_interior_field(s.grid, rng), ref = oracle::random_interior_field(s.grid, rng);
  Field dG;
  const SampleLoss l = sample_loss_and_grad(LossKind::data, s.stencil, G, Field(s.grid), &ref, 0, dG);
  EXPECT_DOUBLE_EQ(l.value, sq_dist(G, ref));
  EXPECT_EQ(l.jacobi_sweeps, 0);
  for (std::size_t k = 0; k < G.size(); ++k) EXPECT_DOUBLE_EQ(dG[k], 2.0 * (G[k] - ref[k]));
}

TEST(Losses, Errors) {
  Fixture s;
  const Field G(s.grid), rho(s.grid);
  Field dG;
  EXPECT_THROW(jacobi_target(s.stencil, G, rho, 0), Error);
  EXPECT_THROW(sample_loss_and_grad(LossKind::data, s.stencil, G, rho, nullptr, 0, dG), Error);
  std::vector<Field> two{G, G};
  EXPECT_THROW(loss_data(two, std::span(&rho, 1)), Error);
  EXPECT_THROW(loss_kind_from_string("mse"), Error);
  EXPECT_EQ(loss_kind_from_string(to_string(LossKind::jacobi)), LossKind::jacobi);
}

#include "greensurrogate/losses.hpp"

#include "greensurrogate/error.hpp"

namespace gsurr {

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "residual") return LossKind::residual;
  if (name == "jacobi") return LossKind::jacobi;
  if (name == "data") return LossKind::data;
  fail(ErrorKind::config, "unknown loss '" + name + "' (expected residual|jacobi|data)");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::residual: return "residual";
    case LossKind::jacobi: return "jacobi";
    case LossKind::data: return "data";
  }
  return "?";
}

namespace {

void require_batch(std::size_t a, std::size_t b, const char* what) {
  if (a != b) fail(ErrorKind::invalid_argument, std::string(what) + ": batch sizes differ");
}

double interior_residual_sq(const StencilCoeffs& stencil, const Field& G, const Field& rho, Field* residual) {
  const Grid& grid = stencil.grid();
  require_same_grid(grid, G.grid(), "loss_residual");
  require_same_grid(grid, rho.grid(), "loss_residual");
  double sum = 0.0;
  for (int j = 1; j < grid.m() - 1; ++j) {
    for (int i = 1; i < grid.n() - 1; ++i) {
      const double r = stencil.diagonal(i, j) * G(i, j) - stencil.east(i, j) * G(i + 1, j) -
                       stencil.west(i, j) * G(i - 1, j) - stencil.north(i, j) * G(i, j + 1) -
                       stencil.south(i, j) * G(i, j - 1) - rho(i, j);
      sum += r * r;
      if (residual != nullptr) (*residual)(i, j) = r;
    }
  }
  return sum;
}

double squared_distance(const Field& a, const Field& b) {
  require_same_grid(a.grid(), b.grid(), "loss");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return sum;
}

}  // namespace

double loss_residual(const StencilCoeffs& stencil, std::span<const Field> G, std::span<const Field> rho) {
  require_batch(G.size(), rho.size(), "loss_residual");
  double total = 0.0;
  for (std::size_t b = 0; b < G.size(); ++b) total += interior_residual_sq(stencil, G[b], rho[b], nullptr);
  return total;
}

Field jacobi_target(const StencilCoeffs& stencil, const Field& G, const Field& rho, int k) {
  require(k >= 1, "jacobi_target: k must be at least 1");
  return jacobi_solve(stencil, rho, G, FixedSweeps{k}).field;
}

double loss_jacobi(const StencilCoeffs& stencil, std::span<const Field> G, std::span<const Field> rho, int k) {
  require_batch(G.size(), rho.size(), "loss_jacobi");
  double total = 0.0;
  for (std::size_t b = 0; b < G.size(); ++b) total += squared_distance(G[b], jacobi_target(stencil, G[b], rho[b], k));
  return total;
}

double loss_data(std::span<const Field> G, std::span<const Field> ref) {
  require_batch(G.size(), ref.size(), "loss_data");
  double total = 0.0;
  for (std::size_t b = 0; b < G.size(); ++b) total += squared_distance(G[b], ref[b]);
  return total;
}

SampleLoss sample_loss_and_grad(LossKind kind, const StencilCoeffs& stencil, const Field& G, const Field& rho,
                                const Field* reference, int k, Field& dG) {
  SampleLoss out;
  switch (kind) {
    case LossKind::residual: {
      Field residual(stencil.grid());
      out.value = interior_residual_sq(stencil, G, rho, &residual);
      dG = apply_Lh_transpose(stencil, residual);
      for (double& v : dG.values()) v *= 2.0;
      break;
    }
    case LossKind::jacobi: {
      const Field target = jacobi_target(stencil, G, rho, k);
      out.value = squared_distance(G, target);
      out.jacobi_sweeps = k;
      dG = Field(G.grid());
      for (std::size_t p = 0; p < G.size(); ++p) dG[p] = 2.0 * (G[p] - target[p]);
      break;
    }
    case LossKind::data: {
      if (reference == nullptr) fail(ErrorKind::invalid_argument, "data loss needs reference fields");
      out.value = squared_distance(G, *reference);
      dG = Field(G.grid());
      for (std::size_t p = 0; p < G.size(); ++p) dG[p] = 2.0 * (G[p] - (*reference)[p]);
      break;
    }
  }
  return out;
}

}  // namespace gsurr

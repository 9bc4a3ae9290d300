#pragma once

#include <optional>
#include <span>
#include <string>

#include "greensurrogate/grid.hpp"
#include "greensurrogate/operator.hpp"

namespace gsurr {

enum class LossKind { residual, jacobi, data };

LossKind loss_kind_from_string(const std::string& name);
std::string to_string(LossKind kind);

/// sum over the batch of sum_{interior} (L_h G - rho)^2.
double loss_residual(const StencilCoeffs& stencil, std::span<const Field> G, std::span<const Field> rho);

/// k Jacobi sweeps started from G. The result is a regression target: no
/// gradient flows through it.
Field jacobi_target(const StencilCoeffs& stencil, const Field& G, const Field& rho, int k);

/// sum over the batch of ||G - jacobi_target(G, rho, k)||^2 over all nodes.
double loss_jacobi(const StencilCoeffs& stencil, std::span<const Field> G, std::span<const Field> rho, int k);

/// sum over the batch of ||G - ref||^2 over all nodes.
double loss_data(std::span<const Field> G, std::span<const Field> ref);

struct SampleLoss {
  double value = 0.0;
  long jacobi_sweeps = 0;
};

/// Per-sample loss and its gradient with respect to the network output G.
/// `reference` is required for LossKind::data; `k` is used by LossKind::jacobi.
SampleLoss sample_loss_and_grad(LossKind kind, const StencilCoeffs& stencil, const Field& G, const Field& rho,
                                const Field* reference, int k, Field& dG);

}  // namespace gsurr

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "greensurrogate/grid.hpp"

namespace gsurr {

/// Coefficients of L u = -div(a grad u) + r u.
struct CoefficientSpec {
  std::string name;  // "laplace", "rd1" or "custom"
  std::function<double(double, double)> a;
  std::function<double(double, double)> r;
  std::string a_expr;  // set for custom coefficients
  std::string r_expr;

  /// Stable identifier used to check that a checkpoint and a problem agree.
  std::string describe() const;
};

CoefficientSpec laplace_coefficients();
/// a = 1 + 2 x2^2, r = 1 + x1^2.
CoefficientSpec rd1_coefficients();
CoefficientSpec custom_coefficients(const std::string& a_expr, const std::string& r_expr);
/// "laplace" | "rd1"; throws Error(config) for anything else.
CoefficientSpec coefficients_by_name(const std::string& name);

/// Five-point stencil of the discrete operator L_h on the interior nodes.
///
/// Arrays are (n-2)*(m-2), indexed by interior_index(i, j) for 1 <= i <= n-2,
/// 1 <= j <= m-2. east/west/north/south are a(edge midpoint)/h^2, center is
/// their sum and reaction is r at the node.
class StencilCoeffs {
 public:
  StencilCoeffs() = default;
  StencilCoeffs(const Grid& grid, std::vector<double> east, std::vector<double> west, std::vector<double> north,
                std::vector<double> south, std::vector<double> reaction);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t interior_index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i - 1) + static_cast<std::size_t>(grid_.n() - 2) * static_cast<std::size_t>(j - 1);
  }
  std::size_t interior_size() const noexcept { return east_.size(); }

  double east(int i, int j) const noexcept { return east_[interior_index(i, j)]; }
  double west(int i, int j) const noexcept { return west_[interior_index(i, j)]; }
  double north(int i, int j) const noexcept { return north_[interior_index(i, j)]; }
  double south(int i, int j) const noexcept { return south_[interior_index(i, j)]; }
  double center(int i, int j) const noexcept { return center_[interior_index(i, j)]; }
  double reaction(int i, int j) const noexcept { return reaction_[interior_index(i, j)]; }
  /// center + reaction, the Jacobi divisor.
  double diagonal(int i, int j) const noexcept { return diagonal_[interior_index(i, j)]; }

  const std::vector<double>& east_array() const noexcept { return east_; }
  const std::vector<double>& west_array() const noexcept { return west_; }
  const std::vector<double>& north_array() const noexcept { return north_; }
  const std::vector<double>& south_array() const noexcept { return south_; }
  const std::vector<double>& diagonal_array() const noexcept { return diagonal_; }

 private:
  Grid grid_{};
  std::vector<double> east_, west_, north_, south_, center_, reaction_, diagonal_;
};

StencilCoeffs assemble_stencil(const Grid& grid, const CoefficientSpec& coeffs);

/// Interior rows: (cC + rC) G_ij - cE G_i+1,j - cW G_i-1,j - cN G_i,j+1 - cS G_i,j-1.
/// Boundary rows are the identity.
Field apply_Lh(const StencilCoeffs& stencil, const Field& G);

/// Transpose of the interior rows of L_h applied to an interior-supported
/// field. Used to back-propagate through the residual loss.
Field apply_Lh_transpose(const StencilCoeffs& stencil, const Field& interior);

/// Mesh-weighted L2 norm of (L_h G - rho) over interior nodes.
double residual_norm(const StencilCoeffs& stencil, const Field& G, const Field& rho);

/// One Jacobi sweep. G must have a zero boundary ring; the result does too.
Field jacobi_step(const StencilCoeffs& stencil, const Field& G, const Field& rho);

/// Unchecked sweep into a preallocated buffer; returns the mesh-weighted
/// residual norm of the *input* iterate, which falls out of the sweep for free.
double jacobi_sweep(const StencilCoeffs& stencil, std::span<const double> G, std::span<const double> rho,
                    std::span<double> out);

struct FixedSweeps {
  int k = 0;
};
struct ToTolerance {
  double tol = 1e-10;
  long max_iter = 1'000'000;
};
using JacobiMode = std::variant<FixedSweeps, ToTolerance>;

struct JacobiResult {
  Field field;
  long iterations = 0;
  double residual_norm = 0.0;
  bool converged = true;
};

/// Runs Jacobi from G0. For ToTolerance, `converged` is false when max_iter
/// was hit; the last iterate is still returned.
JacobiResult jacobi_solve(const StencilCoeffs& stencil, const Field& rho, const Field& G0, const JacobiMode& mode);

/// Dense interior matrix, unknowns ordered by StencilCoeffs::interior_index.
Eigen::MatrixXd assemble_dense(const StencilCoeffs& stencil);

inline constexpr std::size_t kDirectSolveMaxUnknowns = 20000;

/// Solves L_h G = rho with zero boundary through a dense Cholesky factorization.
Field direct_solve(const StencilCoeffs& stencil, const Field& rho);

/// Sparse Cholesky factorization of the interior system, reusable across
/// right-hand sides.
class FactorizedOperator {
 public:
  explicit FactorizedOperator(const StencilCoeffs& stencil);
  ~FactorizedOperator();
  FactorizedOperator(FactorizedOperator&&) noexcept;
  FactorizedOperator& operator=(FactorizedOperator&&) noexcept;

  Field solve(const Field& rho) const;
  const Grid& grid() const noexcept { return grid_; }

 private:
  struct Impl;
  Grid grid_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gsurr

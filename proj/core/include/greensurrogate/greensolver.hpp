#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "greensurrogate/checkpoint.hpp"
#include "greensurrogate/dataset.hpp"
#include "greensurrogate/operator.hpp"
#include "greensurrogate/quadrature.hpp"
#include "greensurrogate/unet.hpp"

namespace gsurr {

/// Source-to-Green's-function map G(., xi) on a fixed grid. Implementations
/// must allow concurrent green() calls.
class GreenProvider {
 public:
  virtual ~GreenProvider() = default;
  virtual const Grid& grid() const = 0;
  /// Name of the operator the provider represents (CoefficientSpec::describe()).
  virtual std::string coeffs() const = 0;
  /// Field with a zero boundary ring.
  virtual Field green(Point xi) const = 0;
};

/// Source width used by the reference provider when solving BVPs. The
/// representation formula sees G smoothed by rho, and at 2 cells that
/// smoothing dominates the solver error; half a cell keeps it below the
/// discretisation error.
inline constexpr double kSolverSigmaFactor = 0.5;

SourceConfig solver_source_config();

/// Finite-difference Green's function: solves L_h G = rho_xi to convergence.
class ReferenceProvider final : public GreenProvider {
 public:
  ReferenceProvider(const Grid& grid, const CoefficientSpec& coeffs, const SourceConfig& source,
                    const ReferenceOptions& options = {});

  const Grid& grid() const override { return stencil_.grid(); }
  std::string coeffs() const override { return coeffs_; }
  Field green(Point xi) const override;
  const StencilCoeffs& stencil() const noexcept { return stencil_; }

 private:
  StencilCoeffs stencil_;
  std::string coeffs_;
  SourceConfig source_;
  ReferenceOptions options_;
  std::shared_ptr<const FactorizedOperator> factorized_;
};

/// Green's function predicted by a trained network.
class LearnedProvider final : public GreenProvider {
 public:
  explicit LearnedProvider(Checkpoint checkpoint);

  const Grid& grid() const override { return grid_; }
  std::string coeffs() const override;
  Field green(Point xi) const override;
  const Checkpoint& checkpoint() const noexcept { return checkpoint_; }

 private:
  Checkpoint checkpoint_;
  Grid grid_;
  std::unique_ptr<UNet> net_;
};

/// Discrete Green's matrix on the interior nodes: column q holds the
/// solution of L_h G = e_q / (h1 h2), the grid's unit point source at node q,
/// read at every interior node p. Rows and columns follow
/// StencilCoeffs::interior_index. Symmetric because L_h is.
Eigen::MatrixXd green_matrix(const StencilCoeffs& stencil);

/// a * dG/dn along one edge with the outward normal, from a one-sided first
/// order difference against the first interior line. Returns one value per
/// node of the edge (n for bottom/top, m for left/right).
std::vector<double> boundary_normal_flux(const Field& G, const CoefficientSpec& coeffs, Edge edge);

/// Dirichlet problem L u = f in the rectangle, u = g on its boundary.
struct BVP {
  std::string name;
  CoefficientSpec coeffs;
  std::function<double(double, double)> f;
  std::function<double(double, double)> g;
  std::function<double(double, double)> exact;  // empty when unknown
  bool homogeneous = false;                     // g identically zero
};

/// "poisson-sin<l>" / "poisson-sin(<l>)", "poisson-cos", "rd1-gauss".
BVP named_case(const std::string& name);
std::vector<std::string> named_case_list();

/// u(xi) = sum_x w_x f(x) G(x, xi) - sum_boundary w_b g(x_b) a(x_b) dG/dn(x_b, xi)
/// for every interior node xi, using symmetry of G to query the provider with
/// xi as the source. Boundary values are set to g.
Field solve_bvp(const GreenProvider& provider, const BVP& bvp, int threads = 1);

Field sample_exact(const Grid& grid, const std::function<double(double, double)>& u);

struct CaseResult {
  Field u;
  Field exact;
  double e2 = 0.0;
};

CaseResult evaluate_case(const GreenProvider& provider, const std::string& case_name, int threads = 1);

}  // namespace gsurr

#include "greensurrogate/operator.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>

#include "greensurrogate/error.hpp"
#include "greensurrogate/expression.hpp"

namespace gsurr {

std::string CoefficientSpec::describe() const {
  if (name == "custom") return "custom:a=" + a_expr + ";r=" + r_expr;
  return name;
}

CoefficientSpec laplace_coefficients() {
  return {"laplace", [](double, double) { return 1.0; }, [](double, double) { return 0.0; }, "1", "0"};
}

CoefficientSpec rd1_coefficients() {
  return {"rd1", [](double, double x2) { return 1.0 + 2.0 * x2 * x2; },
          [](double x1, double) { return 1.0 + x1 * x1; }, "1+2*x2^2", "1+x1^2"};
}

CoefficientSpec custom_coefficients(const std::string& a_expr, const std::string& r_expr) {
  auto a = std::make_shared<Expression>(Expression::parse(a_expr));
  auto r = std::make_shared<Expression>(Expression::parse(r_expr));
  return {"custom", [a](double x1, double x2) { return (*a)(x1, x2); },
          [r](double x1, double x2) { return (*r)(x1, x2); }, a_expr, r_expr};
}

CoefficientSpec coefficients_by_name(const std::string& name) {
  if (name == "laplace") return laplace_coefficients();
  if (name == "rd1") return rd1_coefficients();
  fail(ErrorKind::config, "unknown coefficient set '" + name + "' (expected laplace|rd1)");
}

StencilCoeffs::StencilCoeffs(const Grid& grid, std::vector<double> east, std::vector<double> west,
                             std::vector<double> north, std::vector<double> south, std::vector<double> reaction)
    : grid_(grid),
      east_(std::move(east)),
      west_(std::move(west)),
      north_(std::move(north)),
      south_(std::move(south)),
      reaction_(std::move(reaction)) {
  const std::size_t count = east_.size();
  center_.resize(count);
  diagonal_.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    center_[k] = east_[k] + west_[k] + north_[k] + south_[k];
    diagonal_[k] = center_[k] + reaction_[k];
  }
}

StencilCoeffs assemble_stencil(const Grid& grid, const CoefficientSpec& coeffs) {
  require(static_cast<bool>(coeffs.a) && static_cast<bool>(coeffs.r), "coefficient functions are not set");
  const int n = grid.n();
  const int m = grid.m();
  const double h1 = grid.h1();
  const double h2 = grid.h2();
  const std::size_t count = static_cast<std::size_t>(n - 2) * static_cast<std::size_t>(m - 2);
  std::vector<double> east(count), west(count), north(count), south(count), reaction(count);

  auto diffusion = [&](double x, double y) {
    const double a = coeffs.a(x, y);
    if (!(a > 0.0) || !std::isfinite(a)) {
      fail(ErrorKind::invalid_argument, "diffusion coefficient must be positive, got a(" + std::to_string(x) +
                                            ", " + std::to_string(y) + ") = " + std::to_string(a));
    }
    return a;
  };

  // Vertical-edge midpoints are shared between (i, j) east and (i+1, j) west,
  // and are evaluated once so the assembled matrix is exactly symmetric.
  std::vector<double> vertical_edge(static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      vertical_edge[static_cast<std::size_t>(i) + static_cast<std::size_t>(n - 1) * j] =
          diffusion(0.5 * (grid.x(i) + grid.x(i + 1)), grid.y(j)) / (h1 * h1);
    }
  }
  std::vector<double> horizontal_edge(static_cast<std::size_t>(n) * static_cast<std::size_t>(m - 1));
  for (int j = 0; j + 1 < m; ++j) {
    for (int i = 0; i < n; ++i) {
      horizontal_edge[static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * j] =
          diffusion(grid.x(i), 0.5 * (grid.y(j) + grid.y(j + 1))) / (h2 * h2);
    }
  }

  for (int j = 1; j < m - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      const std::size_t k = static_cast<std::size_t>(i - 1) + static_cast<std::size_t>(n - 2) * (j - 1);
      east[k] = vertical_edge[static_cast<std::size_t>(i) + static_cast<std::size_t>(n - 1) * j];
      west[k] = vertical_edge[static_cast<std::size_t>(i - 1) + static_cast<std::size_t>(n - 1) * j];
      north[k] = horizontal_edge[static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * j];
      south[k] = horizontal_edge[static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * (j - 1)];
      const double r = coeffs.r(grid.x(i), grid.y(j));
      if (!(r >= 0.0) || !std::isfinite(r)) {
        fail(ErrorKind::invalid_argument, "reaction coefficient must be nonnegative, got r(" +
                                              std::to_string(grid.x(i)) + ", " + std::to_string(grid.y(j)) +
                                              ") = " + std::to_string(r));
      }
      reaction[k] = r;
    }
  }
  return StencilCoeffs(grid, std::move(east), std::move(west), std::move(north), std::move(south),
                       std::move(reaction));
}

Field apply_Lh(const StencilCoeffs& stencil, const Field& G) {
  const Grid& grid = stencil.grid();
  require_same_grid(grid, G.grid(), "apply_Lh");
  Field out = G;
  const int n = grid.n();
  for (int j = 1; j < grid.m() - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      out(i, j) = stencil.diagonal(i, j) * G(i, j) - stencil.east(i, j) * G(i + 1, j) -
                  stencil.west(i, j) * G(i - 1, j) - stencil.north(i, j) * G(i, j + 1) -
                  stencil.south(i, j) * G(i, j - 1);
    }
  }
  return out;
}

Field apply_Lh_transpose(const StencilCoeffs& stencil, const Field& interior) {
  const Grid& grid = stencil.grid();
  require_same_grid(grid, interior.grid(), "apply_Lh_transpose");
  Field out(grid);
  for (int j = 1; j < grid.m() - 1; ++j) {
    for (int i = 1; i < grid.n() - 1; ++i) {
      const double v = interior(i, j);
      out(i, j) += stencil.diagonal(i, j) * v;
      out(i + 1, j) -= stencil.east(i, j) * v;
      out(i - 1, j) -= stencil.west(i, j) * v;
      out(i, j + 1) -= stencil.north(i, j) * v;
      out(i, j - 1) -= stencil.south(i, j) * v;
    }
  }
  return out;
}

double residual_norm(const StencilCoeffs& stencil, const Field& G, const Field& rho) {
  const Grid& grid = stencil.grid();
  require_same_grid(grid, G.grid(), "residual_norm");
  require_same_grid(grid, rho.grid(), "residual_norm");
  double sum = 0.0;
  for (int j = 1; j < grid.m() - 1; ++j) {
    for (int i = 1; i < grid.n() - 1; ++i) {
      const double r = stencil.diagonal(i, j) * G(i, j) - stencil.east(i, j) * G(i + 1, j) -
                       stencil.west(i, j) * G(i - 1, j) - stencil.north(i, j) * G(i, j + 1) -
                       stencil.south(i, j) * G(i, j - 1) - rho(i, j);
      sum += r * r;
    }
  }
  return std::sqrt(grid.h1() * grid.h2() * sum);
}

double jacobi_sweep(const StencilCoeffs& stencil, std::span<const double> G, std::span<const double> rho,
                    std::span<double> out) {
  const Grid& grid = stencil.grid();
  const std::size_t n = static_cast<std::size_t>(grid.n());
  const std::size_t m = static_cast<std::size_t>(grid.m());
  const double* cE = stencil.east_array().data();
  const double* cW = stencil.west_array().data();
  const double* cN = stencil.north_array().data();
  const double* cS = stencil.south_array().data();
  const double* diag = stencil.diagonal_array().data();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = 0.0;
    out[i + n * (m - 1)] = 0.0;
  }
  for (std::size_t j = 1; j + 1 < m; ++j) {
    const std::size_t row = n * j;
    const std::size_t crow = (n - 2) * (j - 1) - 1;
    out[row] = 0.0;
    out[row + n - 1] = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const std::size_t p = row + i;
      const std::size_t c = crow + i;
      const double numerator = rho[p] + cE[c] * G[p + 1] + cW[c] * G[p - 1] + cN[c] * G[p + n] + cS[c] * G[p - n];
      const double next = numerator / diag[c];
      const double r = diag[c] * G[p] - numerator;
      sum += r * r;
      out[p] = next;
    }
  }
  return std::sqrt(grid.h1() * grid.h2() * sum);
}

Field jacobi_step(const StencilCoeffs& stencil, const Field& G, const Field& rho) {
  require_same_grid(stencil.grid(), G.grid(), "jacobi_step");
  require_same_grid(stencil.grid(), rho.grid(), "jacobi_step");
  require(G.boundary_is_zero(), "jacobi_step: iterate has a nonzero boundary ring");
  Field out(stencil.grid());
  jacobi_sweep(stencil, G.values(), rho.values(), out.values());
  return out;
}

JacobiResult jacobi_solve(const StencilCoeffs& stencil, const Field& rho, const Field& G0, const JacobiMode& mode) {
  require_same_grid(stencil.grid(), G0.grid(), "jacobi_solve");
  require_same_grid(stencil.grid(), rho.grid(), "jacobi_solve");
  require(G0.boundary_is_zero(), "jacobi_solve: initial iterate has a nonzero boundary ring");

  Field current = G0;
  Field next(stencil.grid());
  JacobiResult result;

  if (const auto* fixed = std::get_if<FixedSweeps>(&mode)) {
    require(fixed->k >= 0, "jacobi_solve: sweep count must be nonnegative");
    for (int l = 0; l < fixed->k; ++l) {
      jacobi_sweep(stencil, current.values(), rho.values(), next.values());
      std::swap(current, next);
    }
    result.iterations = fixed->k;
    result.residual_norm = residual_norm(stencil, current, rho);
    result.field = std::move(current);
    return result;
  }

  const auto& tol = std::get<ToTolerance>(mode);
  require(tol.tol > 0.0 && tol.max_iter >= 0, "jacobi_solve: tolerance must be positive");
  long it = 0;
  for (;;) {
    // The sweep reports the residual of `current`; stop before replacing it.
    const double res = jacobi_sweep(stencil, current.values(), rho.values(), next.values());
    if (res <= tol.tol || it >= tol.max_iter) {
      result.residual_norm = res;
      result.converged = res <= tol.tol;
      break;
    }
    std::swap(current, next);
    ++it;
  }
  result.iterations = it;
  result.field = std::move(current);
  return result;
}

Eigen::MatrixXd assemble_dense(const StencilCoeffs& stencil) {
  const Grid& grid = stencil.grid();
  const auto size = static_cast<Eigen::Index>(stencil.interior_size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(size, size);
  const int n = grid.n();
  const int m = grid.m();
  for (int j = 1; j < m - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      const auto row = static_cast<Eigen::Index>(stencil.interior_index(i, j));
      A(row, row) = stencil.diagonal(i, j);
      if (i + 1 < n - 1) A(row, static_cast<Eigen::Index>(stencil.interior_index(i + 1, j))) = -stencil.east(i, j);
      if (i - 1 > 0) A(row, static_cast<Eigen::Index>(stencil.interior_index(i - 1, j))) = -stencil.west(i, j);
      if (j + 1 < m - 1) A(row, static_cast<Eigen::Index>(stencil.interior_index(i, j + 1))) = -stencil.north(i, j);
      if (j - 1 > 0) A(row, static_cast<Eigen::Index>(stencil.interior_index(i, j - 1))) = -stencil.south(i, j);
    }
  }
  return A;
}

namespace {

Eigen::VectorXd interior_vector(const StencilCoeffs& stencil, const Field& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(stencil.interior_size()));
  const Grid& grid = stencil.grid();
  for (int j = 1; j < grid.m() - 1; ++j) {
    for (int i = 1; i < grid.n() - 1; ++i) v(static_cast<Eigen::Index>(stencil.interior_index(i, j))) = f(i, j);
  }
  return v;
}

Field from_interior(const StencilCoeffs& stencil, const Eigen::VectorXd& v) {
  const Grid& grid = stencil.grid();
  Field out(grid);
  for (int j = 1; j < grid.m() - 1; ++j) {
    for (int i = 1; i < grid.n() - 1; ++i) out(i, j) = v(static_cast<Eigen::Index>(stencil.interior_index(i, j)));
  }
  return out;
}

}  // namespace

Field direct_solve(const StencilCoeffs& stencil, const Field& rho) {
  require_same_grid(stencil.grid(), rho.grid(), "direct_solve");
  if (stencil.interior_size() > kDirectSolveMaxUnknowns) {
    fail(ErrorKind::invalid_argument, "direct_solve: " + std::to_string(stencil.interior_size()) +
                                          " unknowns exceeds the dense limit of " +
                                          std::to_string(kDirectSolveMaxUnknowns));
  }
  const Eigen::MatrixXd A = assemble_dense(stencil);
  const Eigen::VectorXd b = interior_vector(stencil, rho);
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) fail(ErrorKind::numeric, "direct_solve: interior matrix is not positive definite");
  const Eigen::VectorXd x = llt.solve(b);
  const double bnorm = b.norm();
  if ((A * x - b).norm() > 1e-10 * std::max(bnorm, 1e-300) && bnorm > 0.0) {
    fail(ErrorKind::numeric, "direct_solve: residual check failed");
  }
  return from_interior(stencil, x);
}

struct FactorizedOperator::Impl {
  StencilCoeffs stencil;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

FactorizedOperator::FactorizedOperator(const StencilCoeffs& stencil)
    : grid_(stencil.grid()), impl_(std::make_unique<Impl>()) {
  impl_->stencil = stencil;
  const Grid& grid = stencil.grid();
  const auto size = static_cast<Eigen::Index>(stencil.interior_size());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(5 * stencil.interior_size());
  const int n = grid.n();
  const int m = grid.m();
  for (int j = 1; j < m - 1; ++j) {
    for (int i = 1; i < n - 1; ++i) {
      const auto row = static_cast<Eigen::Index>(stencil.interior_index(i, j));
      entries.emplace_back(row, row, stencil.diagonal(i, j));
      if (i + 1 < n - 1) entries.emplace_back(row, stencil.interior_index(i + 1, j), -stencil.east(i, j));
      if (i - 1 > 0) entries.emplace_back(row, stencil.interior_index(i - 1, j), -stencil.west(i, j));
      if (j + 1 < m - 1) entries.emplace_back(row, stencil.interior_index(i, j + 1), -stencil.north(i, j));
      if (j - 1 > 0) entries.emplace_back(row, stencil.interior_index(i, j - 1), -stencil.south(i, j));
    }
  }
  Eigen::SparseMatrix<double> A(size, size);
  A.setFromTriplets(entries.begin(), entries.end());
  impl_->llt.compute(A);
  if (impl_->llt.info() != Eigen::Success) fail(ErrorKind::numeric, "sparse Cholesky factorization failed");
}

FactorizedOperator::~FactorizedOperator() = default;
FactorizedOperator::FactorizedOperator(FactorizedOperator&&) noexcept = default;
FactorizedOperator& FactorizedOperator::operator=(FactorizedOperator&&) noexcept = default;

Field FactorizedOperator::solve(const Field& rho) const {
  require_same_grid(grid_, rho.grid(), "FactorizedOperator::solve");
  const Eigen::VectorXd x = impl_->llt.solve(interior_vector(impl_->stencil, rho));
  return from_interior(impl_->stencil, x);
}

}  // namespace gsurr

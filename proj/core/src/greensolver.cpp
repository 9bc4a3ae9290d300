#include "greensurrogate/greensolver.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <regex>

#include "greensurrogate/error.hpp"
#include "greensurrogate/parallel.hpp"

namespace gsurr {

SourceConfig solver_source_config() {
  SourceConfig cfg;
  cfg.sigma_factor = kSolverSigmaFactor;
  return cfg;
}

ReferenceProvider::ReferenceProvider(const Grid& grid, const CoefficientSpec& coeffs, const SourceConfig& source,
                                     const ReferenceOptions& options)
    : stencil_(assemble_stencil(grid, coeffs)), coeffs_(coeffs.describe()), source_(source), options_(options) {
  source_.validate();
  if (options_.solver == ReferenceSolver::direct) factorized_ = std::make_shared<FactorizedOperator>(stencil_);
}

Field ReferenceProvider::green(Point xi) const {
  const Field rho = gaussian_source(stencil_.grid(), xi, source_sigma(stencil_.grid(), source_));
  return reference_solution(stencil_, rho, options_, factorized_.get());
}

LearnedProvider::LearnedProvider(Checkpoint checkpoint) : checkpoint_(std::move(checkpoint)) {
  const UNetConfig& c = checkpoint_.params.config;
  grid_ = build_grid(checkpoint_.problem.domain, c.n, c.m);
  net_ = std::make_unique<UNet>(c);
  if (c.in_channels != channel_count(checkpoint_.problem.variant)) {
    fail(ErrorKind::config, "checkpoint input variant does not match its network input channels");
  }
}

std::string LearnedProvider::coeffs() const {
  return coefficients_from_description(checkpoint_.problem.coeffs, checkpoint_.problem.coeffs_a,
                                       checkpoint_.problem.coeffs_r)
      .describe();
}

Field LearnedProvider::green(Point xi) const {
  const InputTensor input = build_input(grid_, xi, checkpoint_.problem.variant, checkpoint_.problem.source);
  auto ws = net_->make_workspace();
  return net_->forward(checkpoint_.params, input, *ws);
}

Eigen::MatrixXd green_matrix(const StencilCoeffs& stencil) {
  const Grid& grid = stencil.grid();
  require(stencil.interior_size() <= kDirectSolveMaxUnknowns, "green_matrix: grid too large for a dense matrix");
  const FactorizedOperator op(stencil);
  const auto N = static_cast<Eigen::Index>(stencil.interior_size());
  Eigen::MatrixXd out(N, N);
  Field rho(grid);
  const double unit = 1.0 / (grid.h1() * grid.h2());
  for (int jq = 1; jq < grid.m() - 1; ++jq) {
    for (int iq = 1; iq < grid.n() - 1; ++iq) {
      rho(iq, jq) = unit;
      const Field G = op.solve(rho);
      rho(iq, jq) = 0.0;
      const auto q = static_cast<Eigen::Index>(stencil.interior_index(iq, jq));
      for (int j = 1; j < grid.m() - 1; ++j) {
        for (int i = 1; i < grid.n() - 1; ++i) out(static_cast<Eigen::Index>(stencil.interior_index(i, j)), q) = G(i, j);
      }
    }
  }
  return out;
}

std::vector<double> boundary_normal_flux(const Field& G, const CoefficientSpec& coeffs, Edge edge) {
  const Grid& grid = G.grid();
  require(G.boundary_is_zero(), "boundary_normal_flux: Green's function must vanish on the boundary");
  const int n = grid.n();
  const int m = grid.m();
  std::vector<double> flux;
  switch (edge) {
    case Edge::left:
    case Edge::right: {
      const int ib = edge == Edge::left ? 0 : n - 1;
      const int ii = edge == Edge::left ? 1 : n - 2;
      flux.resize(static_cast<std::size_t>(m));
      for (int j = 0; j < m; ++j) {
        flux[static_cast<std::size_t>(j)] = coeffs.a(grid.x(ib), grid.y(j)) * (G(ib, j) - G(ii, j)) / grid.h1();
      }
      break;
    }
    case Edge::bottom:
    case Edge::top: {
      const int jb = edge == Edge::bottom ? 0 : m - 1;
      const int ji = edge == Edge::bottom ? 1 : m - 2;
      flux.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        flux[static_cast<std::size_t>(i)] = coeffs.a(grid.x(i), grid.y(jb)) * (G(i, jb) - G(i, ji)) / grid.h2();
      }
      break;
    }
    default:
      fail(ErrorKind::invalid_argument, "boundary_normal_flux: invalid edge");
  }
  return flux;
}

namespace {

constexpr double kPi = std::numbers::pi;

BVP poisson_sin(double lambda) {
  const double w = 2.0 * lambda * kPi;
  BVP bvp;
  char label[48];
  std::snprintf(label, sizeof label, "poisson-sin(%g)", lambda);
  bvp.name = label;
  bvp.coeffs = laplace_coefficients();
  bvp.exact = [w](double x, double y) { return std::sin(w * x) * std::sin(w * y); };
  bvp.f = [w](double x, double y) { return 2.0 * w * w * std::sin(w * x) * std::sin(w * y); };
  bvp.g = [](double, double) { return 0.0; };
  bvp.homogeneous = true;
  return bvp;
}

BVP poisson_cos() {
  BVP bvp;
  bvp.name = "poisson-cos";
  bvp.coeffs = laplace_coefficients();
  bvp.exact = [](double x, double y) { return std::cos(kPi * x) * std::cos(kPi * y); };
  bvp.f = [](double x, double y) { return 2.0 * kPi * kPi * std::cos(kPi * x) * std::cos(kPi * y); };
  bvp.g = bvp.exact;
  return bvp;
}

// u = 10^-(x^2 + 2y^2 + 1) with a = 1 + 2y^2, r = 1 + x^2:
// L u = -(a (u_xx + u_yy) + a_y u_y) + r u.
BVP rd1_gauss() {
  const double c = std::numbers::ln10;
  BVP bvp;
  bvp.name = "rd1-gauss";
  bvp.coeffs = rd1_coefficients();
  bvp.exact = [](double x, double y) { return std::pow(10.0, -(x * x + 2.0 * y * y + 1.0)); };
  bvp.f = [c](double x, double y) {
    const double u = std::pow(10.0, -(x * x + 2.0 * y * y + 1.0));
    const double a = 1.0 + 2.0 * y * y;
    const double laplacian = (-6.0 * c + 4.0 * c * c * x * x + 16.0 * c * c * y * y) * u;
    const double ay_uy = (4.0 * y) * (-4.0 * c * y * u);
    return -(a * laplacian + ay_uy) + (1.0 + x * x) * u;
  };
  bvp.g = bvp.exact;
  return bvp;
}

}  // namespace

BVP named_case(const std::string& name) {
  static const std::regex sin_case(R"(poisson-sin\(?([0-9]+(\.[0-9]+)?)\)?)");
  std::smatch match;
  if (std::regex_match(name, match, sin_case)) return poisson_sin(std::stod(match[1].str()));
  if (name == "poisson-cos") return poisson_cos();
  if (name == "rd1-gauss") return rd1_gauss();
  fail(ErrorKind::config, "unknown case '" + name + "' (expected poisson-sin<l>, poisson-cos or rd1-gauss)");
}

std::vector<std::string> named_case_list() { return {"poisson-sin2", "poisson-sin4", "poisson-cos", "rd1-gauss"}; }

Field sample_exact(const Grid& grid, const std::function<double(double, double)>& u) {
  Field out(grid);
  for (int j = 0; j < grid.m(); ++j) {
    for (int i = 0; i < grid.n(); ++i) out(i, j) = u(grid.x(i), grid.y(j));
  }
  return out;
}

Field solve_bvp(const GreenProvider& provider, const BVP& bvp, int threads) {
  require(static_cast<bool>(bvp.f) && static_cast<bool>(bvp.g), "solve_bvp: f and g must be set");
  if (provider.coeffs() != bvp.coeffs.describe()) {
    fail(ErrorKind::config, "Green's function provider represents '" + provider.coeffs() + "' but the problem uses '" +
                                bvp.coeffs.describe() + "'");
  }
  const Grid& grid = provider.grid();
  const QuadratureRule quad = build_quadrature(grid);
  const int n = grid.n();
  const int m = grid.m();

  std::vector<double> weighted_f(grid.size());
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) weighted_f[grid.index(i, j)] = quad.volume[grid.index(i, j)] * bvp.f(grid.x(i), grid.y(j));
  }
  // w_b * g at boundary nodes; left/right skip the corners, which belong to bottom/top.
  std::vector<double> wg_bottom(static_cast<std::size_t>(n)), wg_top(static_cast<std::size_t>(n));
  std::vector<double> wg_left(static_cast<std::size_t>(m), 0.0), wg_right(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < n; ++i) {
    wg_bottom[static_cast<std::size_t>(i)] = quad.bottom[static_cast<std::size_t>(i)] * bvp.g(grid.x(i), grid.y(0));
    wg_top[static_cast<std::size_t>(i)] = quad.top[static_cast<std::size_t>(i)] * bvp.g(grid.x(i), grid.y(m - 1));
  }
  for (int j = 1; j < m - 1; ++j) {
    wg_left[static_cast<std::size_t>(j)] = quad.left[static_cast<std::size_t>(j)] * bvp.g(grid.x(0), grid.y(j));
    wg_right[static_cast<std::size_t>(j)] = quad.right[static_cast<std::size_t>(j)] * bvp.g(grid.x(n - 1), grid.y(j));
  }

  Field u(grid);
  const std::size_t interior_n = static_cast<std::size_t>(n - 2);
  const std::size_t count = interior_n * static_cast<std::size_t>(m - 2);
  parallel_for(count, threads, [&](std::size_t k, std::size_t) {
    const int i = 1 + static_cast<int>(k % interior_n);
    const int j = 1 + static_cast<int>(k / interior_n);
    const Field G = provider.green(grid.node(i, j));
    if (!G.boundary_is_zero()) fail(ErrorKind::numeric, "provider returned a Green's function with nonzero boundary");
    double volume = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) volume += weighted_f[p] * G[p];
    double boundary = 0.0;
    if (!bvp.homogeneous) {
      auto accumulate = [&](Edge e, const std::vector<double>& wg) {
        const std::vector<double> flux = boundary_normal_flux(G, bvp.coeffs, e);
        for (std::size_t b = 0; b < flux.size(); ++b) boundary += wg[b] * flux[b];
      };
      accumulate(Edge::bottom, wg_bottom);
      accumulate(Edge::top, wg_top);
      accumulate(Edge::left, wg_left);
      accumulate(Edge::right, wg_right);
    }
    u(i, j) = volume - boundary;
  });
  for (int i = 0; i < n; ++i) {
    u(i, 0) = bvp.g(grid.x(i), grid.y(0));
    u(i, m - 1) = bvp.g(grid.x(i), grid.y(m - 1));
  }
  for (int j = 0; j < m; ++j) {
    u(0, j) = bvp.g(grid.x(0), grid.y(j));
    u(n - 1, j) = bvp.g(grid.x(n - 1), grid.y(j));
  }
  return u;
}

CaseResult evaluate_case(const GreenProvider& provider, const std::string& case_name, int threads) {
  const BVP bvp = named_case(case_name);
  CaseResult r;
  r.u = solve_bvp(provider, bvp, threads);
  r.exact = sample_exact(provider.grid(), bvp.exact);
  r.e2 = l2_error(r.u, r.exact);
  return r;
}

}  // namespace gsurr

#include "greensurrogate/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "greensurrogate/error.hpp"

namespace gsurr {

Grid::Grid(const RectDomain& domain, int n, int m)
    : domain_(domain), n_(n), m_(m), h1_(domain.L1 / (n - 1)), h2_(domain.L2 / (m - 1)) {}

// The last node is pinned to the far edge so corners are reproduced exactly.
double Grid::x(int i) const noexcept {
  if (i == n_ - 1) return domain_.x0 + domain_.L1;
  return domain_.x0 + i * h1_;
}

double Grid::y(int j) const noexcept {
  if (j == m_ - 1) return domain_.y0 + domain_.L2;
  return domain_.y0 + j * h2_;
}

Grid build_grid(const RectDomain& domain, int n, int m) {
  require(n >= 3 && m >= 3, "grid needs at least 3 nodes per axis, got " + std::to_string(n) + "x" +
                                std::to_string(m));
  require(std::isfinite(domain.x0) && std::isfinite(domain.y0), "domain origin must be finite");
  require(std::isfinite(domain.L1) && std::isfinite(domain.L2) && domain.L1 > 0.0 && domain.L2 > 0.0,
          "domain extents must be positive");
  return Grid(domain, n, m);
}

Field::Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  require(values_.size() == grid_.size(), "field value count does not match grid");
}

bool Field::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Field::boundary_is_zero() const noexcept {
  const int n = grid_.n();
  const int m = grid_.m();
  for (int i = 0; i < n; ++i) {
    if ((*this)(i, 0) != 0.0 || (*this)(i, m - 1) != 0.0) return false;
  }
  for (int j = 0; j < m; ++j) {
    if ((*this)(0, j) != 0.0 || (*this)(n - 1, j) != 0.0) return false;
  }
  return true;
}

void Field::zero_boundary() noexcept {
  const int n = grid_.n();
  const int m = grid_.m();
  for (int i = 0; i < n; ++i) {
    (*this)(i, 0) = 0.0;
    (*this)(i, m - 1) = 0.0;
  }
  for (int j = 0; j < m; ++j) {
    (*this)(0, j) = 0.0;
    (*this)(n - 1, j) = 0.0;
  }
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) fail(ErrorKind::invalid_argument, std::string(what) + ": grid mismatch");
}

double l2_error(const Field& a, const Field& b) {
  require_same_grid(a.grid(), b.grid(), "l2_error");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return std::sqrt(a.grid().h1() * a.grid().h2() * sum);
}

double l2_norm(const Field& a) {
  double sum = 0.0;
  for (double v : a.values()) sum += v * v;
  return std::sqrt(a.grid().h1() * a.grid().h2() * sum);
}

double max_abs_diff(const Field& a, const Field& b) {
  require_same_grid(a.grid(), b.grid(), "max_abs_diff");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

}  // namespace gsurr

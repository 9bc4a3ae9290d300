#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gsurr {

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

/// Axis-aligned rectangle [x0, x0 + L1] x [y0, y0 + L2].
struct RectDomain {
  double x0 = 0.0;
  double y0 = 0.0;
  double L1 = 1.0;
  double L2 = 1.0;

  bool operator==(const RectDomain&) const = default;

  bool contains(Point p) const {
    return p.x >= x0 && p.x <= x0 + L1 && p.y >= y0 && p.y <= y0 + L2;
  }
};

/// Uniform node-centred mesh over a RectDomain.
///
/// Nodes are indexed from 0: node(i, j) = (x0 + i*h1, y0 + j*h2) for
/// i in [0, n) and j in [0, m). Storage is row-major with i (the x index)
/// fastest, so the flat index of node(i, j) is i + n*j. The outermost ring
/// (i in {0, n-1} or j in {0, m-1}) holds the Dirichlet nodes.
class Grid {
 public:
  Grid() = default;
  Grid(const RectDomain& domain, int n, int m);

  const RectDomain& domain() const noexcept { return domain_; }
  int n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  double h1() const noexcept { return h1_; }
  double h2() const noexcept { return h2_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_); }

  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_) * static_cast<std::size_t>(j);
  }
  double x(int i) const noexcept;
  double y(int j) const noexcept;
  Point node(int i, int j) const noexcept { return {x(i), y(j)}; }
  bool is_boundary(int i, int j) const noexcept { return i == 0 || j == 0 || i == n_ - 1 || j == m_ - 1; }

  bool operator==(const Grid& other) const noexcept {
    return domain_ == other.domain_ && n_ == other.n_ && m_ == other.m_;
  }

 private:
  RectDomain domain_{};
  int n_ = 0;
  int m_ = 0;
  double h1_ = 0.0;
  double h2_ = 0.0;
};

/// Builds the mesh; rejects n < 3, m < 3 and non-positive extents.
Grid build_grid(const RectDomain& domain, int n, int m);

/// Real values sampled at every node of a Grid.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}
  Field(const Grid& grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }
  double& operator[](std::size_t k) noexcept { return values_[k]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }

  bool all_finite() const noexcept;
  /// True when every node of the outer ring is exactly zero.
  bool boundary_is_zero() const noexcept;
  void zero_boundary() noexcept;

  bool operator==(const Field& other) const noexcept {
    return grid_ == other.grid_ && values_ == other.values_;
  }

 private:
  Grid grid_{};
  std::vector<double> values_;
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);

/// Mesh-weighted discrete L2 distance sqrt(h1*h2 * sum_ij (a_ij - b_ij)^2).
double l2_error(const Field& a, const Field& b);

/// Mesh-weighted discrete L2 norm of a field.
double l2_norm(const Field& a);

double max_abs_diff(const Field& a, const Field& b);

}  // namespace gsurr

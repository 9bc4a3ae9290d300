#pragma once

#include <vector>

#include "greensurrogate/grid.hpp"

namespace gsurr {

/// Composite Simpson weights for `count` equispaced nodes with spacing h.
/// An odd number of intervals is closed with a Simpson 3/8 block over the
/// last three, so cubics are integrated exactly for every count >= 3 (count == 4
/// is pure 3/8).
std::vector<double> simpson_weights_1d(int count, double h);

enum class Edge { left, right, bottom, top };

inline constexpr Edge kAllEdges[] = {Edge::left, Edge::right, Edge::bottom, Edge::top};

/// Tensor-product volume weights plus per-edge 1D weights. Edge arrays run
/// over every node of the edge (corners included) so each sums to the edge
/// length; the boundary sum itself assigns corners to bottom/top only.
struct QuadratureRule {
  Grid grid;
  std::vector<double> volume;  // grid.index(i, j)
  std::vector<double> bottom;  // size n, along x
  std::vector<double> top;
  std::vector<double> left;    // size m, along y
  std::vector<double> right;

  const std::vector<double>& edge(Edge e) const;
};

QuadratureRule build_quadrature(const Grid& grid);

}  // namespace gsurr

#include "greensurrogate/quadrature.hpp"

#include "greensurrogate/error.hpp"

namespace gsurr {

std::vector<double> simpson_weights_1d(int count, double h) {
  require(count >= 3, "simpson_weights_1d: need at least 3 nodes");
  require(h > 0.0, "simpson_weights_1d: spacing must be positive");
  std::vector<double> w(static_cast<std::size_t>(count), 0.0);
  const int intervals = count - 1;
  const int simpson_intervals = intervals % 2 == 0 ? intervals : intervals - 3;
  for (int s = 0; s < simpson_intervals; s += 2) {
    w[static_cast<std::size_t>(s)] += h / 3.0;
    w[static_cast<std::size_t>(s) + 1] += 4.0 * h / 3.0;
    w[static_cast<std::size_t>(s) + 2] += h / 3.0;
  }
  if (simpson_intervals != intervals) {
    const auto s = static_cast<std::size_t>(simpson_intervals);
    w[s] += 3.0 * h / 8.0;
    w[s + 1] += 9.0 * h / 8.0;
    w[s + 2] += 9.0 * h / 8.0;
    w[s + 3] += 3.0 * h / 8.0;
  }
  return w;
}

const std::vector<double>& QuadratureRule::edge(Edge e) const {
  switch (e) {
    case Edge::left: return left;
    case Edge::right: return right;
    case Edge::bottom: return bottom;
    case Edge::top: return top;
  }
  fail(ErrorKind::invalid_argument, "invalid edge");
}

QuadratureRule build_quadrature(const Grid& grid) {
  QuadratureRule q;
  q.grid = grid;
  const std::vector<double> wx = simpson_weights_1d(grid.n(), grid.h1());
  const std::vector<double> wy = simpson_weights_1d(grid.m(), grid.h2());
  q.volume.resize(grid.size());
  for (int j = 0; j < grid.m(); ++j) {
    for (int i = 0; i < grid.n(); ++i) q.volume[grid.index(i, j)] = wx[static_cast<std::size_t>(i)] * wy[static_cast<std::size_t>(j)];
  }
  q.bottom = wx;
  q.top = wx;
  q.left = wy;
  q.right = wy;
  return q;
}

}  // namespace gsurr

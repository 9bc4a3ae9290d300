#include "greensurrogate/source.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "greensurrogate/error.hpp"
#include "greensurrogate/rng.hpp"

namespace gsurr {

void SourceConfig::validate() const {
  require(std::isfinite(sigma_factor) && sigma_factor > 0.0, "sigma_factor must be positive");
  require(margin_cells >= 1, "margin_cells must be at least 1");
}

double source_sigma(const Grid& grid, const SourceConfig& cfg) {
  cfg.validate();
  return cfg.sigma_factor * std::max(grid.h1(), grid.h2());
}

Field gaussian_source(const Grid& grid, Point xi, double sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, "gaussian_source: sigma must be positive");
  require(grid.domain().contains(xi), "gaussian_source: source point outside the domain");
  Field out(grid);
  const double scale = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  for (int j = 0; j < grid.m(); ++j) {
    const double dy = grid.y(j) - xi.y;
    for (int i = 0; i < grid.n(); ++i) {
      const double dx = grid.x(i) - xi.x;
      out(i, j) = scale * std::exp(-(dx * dx + dy * dy) * inv_two_var);
    }
  }
  return out;
}

Field distance_field(const Grid& grid, Point xi) {
  require(grid.domain().contains(xi), "distance_field: source point outside the domain");
  Field out(grid);
  for (int j = 0; j < grid.m(); ++j) {
    for (int i = 0; i < grid.n(); ++i) out(i, j) = std::hypot(grid.x(i) - xi.x, grid.y(j) - xi.y);
  }
  const auto [lo, hi] = std::minmax_element(out.values().begin(), out.values().end());
  const double rmin = *lo;
  const double rmax = *hi;
  if (!(rmax > rmin)) fail(ErrorKind::numeric, "distance_field: degenerate distance range");
  for (double& v : out.values()) v = (v - rmin) / (rmax - rmin);
  return out;
}

InputVariant input_variant_from_int(int v) {
  if (v < 1 || v > 3) fail(ErrorKind::invalid_argument, "input variant must be 1, 2 or 3, got " + std::to_string(v));
  return static_cast<InputVariant>(v);
}

int channel_count(InputVariant v) noexcept { return static_cast<int>(v); }

InputTensor build_input(const Grid& grid, Point xi, InputVariant variant, const SourceConfig& cfg) {
  const int channels = channel_count(input_variant_from_int(static_cast<int>(variant)));
  const Field rho = gaussian_source(grid, xi, source_sigma(grid, cfg));
  InputTensor t{grid, channels, std::vector<double>(grid.size() * static_cast<std::size_t>(channels))};
  auto channel = [&](int c) { return t.data.begin() + static_cast<std::ptrdiff_t>(grid.size() * c); };

  switch (variant) {
    case InputVariant::rho:
      break;
    case InputVariant::distance_rho: {
      const Field r = distance_field(grid, xi);
      std::copy(r.values().begin(), r.values().end(), channel(0));
      break;
    }
    case InputVariant::coords_rho:
      for (int j = 0; j < grid.m(); ++j) {
        for (int i = 0; i < grid.n(); ++i) {
          channel(0)[static_cast<std::ptrdiff_t>(grid.index(i, j))] = grid.x(i);
          channel(1)[static_cast<std::ptrdiff_t>(grid.index(i, j))] = grid.y(j);
        }
      }
      break;
  }
  std::copy(rho.values().begin(), rho.values().end(), channel(channels - 1));
  return t;
}

std::vector<Point> sample_sources(const Grid& grid, int count, const SourceConfig& cfg, std::uint64_t stream_offset) {
  require(count >= 1, "sample_sources: count must be at least 1");
  cfg.validate();
  const RectDomain& d = grid.domain();
  const double xlo = d.x0 + cfg.margin_cells * grid.h1();
  const double xhi = d.x0 + d.L1 - cfg.margin_cells * grid.h1();
  const double ylo = d.y0 + cfg.margin_cells * grid.h2();
  const double yhi = d.y0 + d.L2 - cfg.margin_cells * grid.h2();
  if (!(xlo < xhi) || !(ylo < yhi)) {
    fail(ErrorKind::config, "margin of " + std::to_string(cfg.margin_cells) + " cells leaves no room for sources");
  }
  std::vector<Point> points(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    std::mt19937_64 engine(substream_seed(cfg.seed, stream_offset + static_cast<std::uint64_t>(k)));
    const double x = uniform(engine, xlo, xhi);
    const double y = uniform(engine, ylo, yhi);
    points[static_cast<std::size_t>(k)] = {x, y};
  }
  return points;
}

}  // namespace gsurr

#pragma once

#include <cstdint>
#include <vector>

#include "greensurrogate/grid.hpp"

namespace gsurr {

struct SourceConfig {
  double sigma_factor = 2.0;  // sigma = sigma_factor * max(h1, h2)
  int margin_cells = 2;       // sources stay this many cells away from the boundary
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SourceConfig&) const = default;
};

double source_sigma(const Grid& grid, const SourceConfig& cfg);

/// Gaussian density (1 / (2 pi sigma^2)) exp(-|x - xi|^2 / (2 sigma^2)) at every node.
Field gaussian_source(const Grid& grid, Point xi, double sigma);

/// Distances |x_ij - xi| min-max normalised to [0, 1].
Field distance_field(const Grid& grid, Point xi);

/// Input encodings: 1 = [rho], 2 = [R, rho], 3 = [X1, X2, rho].
enum class InputVariant : int { rho = 1, distance_rho = 2, coords_rho = 3 };

InputVariant input_variant_from_int(int v);
int channel_count(InputVariant v) noexcept;

/// Channel-major stack of grid fields: data[c * n * m + grid.index(i, j)].
struct InputTensor {
  Grid grid;
  int channels = 0;
  std::vector<double> data;

  bool operator==(const InputTensor&) const = default;
};

InputTensor build_input(const Grid& grid, Point xi, InputVariant variant, const SourceConfig& cfg);

/// i.i.d. uniform points on the margin-shrunk rectangle. Point k is drawn from
/// its own substream of cfg.seed so results do not depend on scheduling.
std::vector<Point> sample_sources(const Grid& grid, int count, const SourceConfig& cfg, std::uint64_t stream_offset = 0);

}  // namespace gsurr

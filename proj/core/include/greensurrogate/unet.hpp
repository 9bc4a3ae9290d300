#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "greensurrogate/grid.hpp"
#include "greensurrogate/source.hpp"

namespace gsurr {

/// U-Net hyperparameters. Level l (0-based) runs at resolution
/// (n / 2^l) x (m / 2^l) with first_channels * 2^l feature maps.
struct UNetConfig {
  int in_channels = 1;
  int first_channels = 32;
  int depth = 4;
  int n = 64;
  int m = 64;

  void validate() const;
  int level_channels(int level) const noexcept { return first_channels << level; }
  bool operator==(const UNetConfig&) const = default;
};

enum class LayerKind { conv3x3, upconv2x2, conv1x1 };

struct LayerSpec {
  std::string name;
  LayerKind kind;
  int in_channels;
  int out_channels;
  int level;
  std::size_t weight_offset;
  std::size_t weight_count;
  std::size_t bias_offset;
  std::size_t bias_count;
};

/// All trainable weights, flattened in layer declaration order
/// (weights then bias for each layer).
struct UNetParams {
  UNetConfig config;
  std::vector<double> values;

  bool operator==(const UNetParams&) const = default;
};

/// Encoder: two same-padded 3x3 conv + ReLU per level, 2x2 max-pool between
/// levels. Decoder: 2x2 stride-2 transposed conv, concat with the matching
/// encoder output, two 3x3 conv + ReLU. A 1x1 conv maps to one channel and
/// the outermost node ring is multiplied by zero.
class UNet {
 public:
  explicit UNet(const UNetConfig& config);
  ~UNet();
  UNet(const UNet&) = delete;
  UNet& operator=(const UNet&) = delete;

  const UNetConfig& config() const noexcept { return config_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::size_t param_count() const noexcept { return param_count_; }

  UNetParams init(std::uint64_t seed) const;

  /// Activation storage for one sample; reused across calls. Not shareable
  /// between threads.
  class Workspace;
  struct WorkspaceDeleter {
    void operator()(Workspace* ws) const noexcept;
  };
  using WorkspacePtr = std::unique_ptr<Workspace, WorkspaceDeleter>;
  WorkspacePtr make_workspace() const;

  /// Runs the network and records the activations needed by backward().
  Field forward(const UNetParams& params, const InputTensor& input, Workspace& ws) const;

  /// Reverse-mode pass for the most recent forward() on `ws`. Overwrites
  /// `grad` (size param_count()) with d<upstream, output>/d params.
  void backward(const UNetParams& params, Workspace& ws, const Field& upstream, std::span<double> grad) const;

 private:
  void check(const UNetParams& params) const;

  UNetConfig config_;
  std::vector<LayerSpec> layers_;
  std::size_t param_count_ = 0;
};

std::size_t param_count(const UNetConfig& config);
UNetParams init_unet(const UNetConfig& config, std::uint64_t seed);
Field forward(const UNetParams& params, const InputTensor& input);
std::vector<double> gradient(const UNetParams& params, const InputTensor& input, const Field& upstream);

}  // namespace gsurr

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "greensurrogate/grid.hpp"
#include "greensurrogate/kschedule.hpp"
#include "greensurrogate/source.hpp"
#include "greensurrogate/unet.hpp"

namespace gsurr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// What a checkpoint was trained on; needed to rebuild inputs at inference.
struct ProblemInfo {
  RectDomain domain{};
  std::string coeffs = "laplace";  // CoefficientSpec::name
  std::string coeffs_a;
  std::string coeffs_r;
  SourceConfig source{};
  InputVariant variant = InputVariant::rho;

  bool operator==(const ProblemInfo&) const = default;
};

struct TrainingState {
  int epoch = 0;
  KScheduleState k_schedule{};
  std::uint64_t seed = 0;
  double val_metric = 0.0;

  bool operator==(const TrainingState&) const = default;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  UNetParams params;
  ProblemInfo problem;
  TrainingState training;

  bool operator==(const Checkpoint&) const = default;
};

/// Layout: "GSUN", u32 version, u64 JSON length, JSON header (config and
/// metadata), u64 parameter count, float64 parameters; all little-endian.
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Also rejects a checkpoint whose network configuration differs from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const UNetConfig& expected);

}  // namespace gsurr

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "greensurrogate/dataset.hpp"
#include "greensurrogate/trainer.hpp"
#include "greensurrogate/unet.hpp"

namespace gsurr::cli {

struct RunConfig {
  RectDomain domain{-1.0, -1.0, 2.0, 2.0};
  int n = 64;
  int m = 64;
  CoefficientSpec coeffs = laplace_coefficients();
  SourceConfig source{};
  InputVariant variant = InputVariant::rho;

  int n_train = 2000;
  int n_val = 100;
  bool train_references = false;
  ReferenceOptions reference{ReferenceSolver::direct};
  std::optional<std::filesystem::path> data_dir;

  int first_channels = 32;
  int depth = 4;

  TrainConfig train{};
  std::optional<std::filesystem::path> output_dir;

  Grid grid() const;
  UNetConfig net_config() const;
  DatasetSpec dataset_spec() const;
};

/// Parses and validates a RunConfig document. Unknown keys are errors.
/// Relative paths are resolved against `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace gsurr::cli

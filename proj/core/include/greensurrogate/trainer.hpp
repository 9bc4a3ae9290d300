#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "greensurrogate/checkpoint.hpp"
#include "greensurrogate/dataset.hpp"
#include "greensurrogate/kschedule.hpp"
#include "greensurrogate/losses.hpp"
#include "greensurrogate/operator.hpp"
#include "greensurrogate/unet.hpp"

namespace gsurr {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment gradient descent over a flat parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(const AdamConfig& config, std::size_t size);

  void step(std::span<double> params, std::span<const double> grad);
  long steps() const noexcept { return t_; }

 private:
  AdamConfig config_;
  std::vector<double> first_;
  std::vector<double> second_;
  long t_ = 0;
};

struct TrainConfig {
  int epochs = 150;
  int batch_size = 6;
  AdamConfig optimizer{};
  LossKind loss = LossKind::jacobi;
  KScheduleState schedule = make_k_schedule(KStrategy::adaptive);
  std::uint64_t seed = 0;  // network init and per-epoch shuffles
  bool deterministic = true;
  int threads = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;            // 1-based
  double train_loss = 0.0;  // epoch mean of the optimised loss, per sample per node
  double val_loss = 0.0;    // validate() metric
  int k = 0;                // sweeps used for this epoch's targets
  double seconds = 0.0;     // wall time of the epoch
  long sweeps = 0;          // cumulative Jacobi sweeps spent on training targets
  long steps = 0;           // optimizer steps in this epoch

  bool operator==(const EpochRecord&) const = default;
};

using TrainHistory = std::vector<EpochRecord>;

struct TrainOutputs {
  std::optional<std::filesystem::path> directory;  // best.gsun, final.gsun, history.csv
  ProblemInfo problem{};
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  UNetParams final_params;
  UNetParams best_params;
  int best_epoch = 0;
  double best_val = 0.0;
  TrainHistory history;
  KScheduleState final_schedule;
};

/// Mean over samples of the mesh-weighted squared L2 error between the
/// network output and each sample's converged reference.
double validate(const UNetParams& params, std::span<const SourceSample> samples, int threads = 1);

TrainResult train(const StencilCoeffs& stencil, const Dataset& dataset, const UNetConfig& net_config,
                  const TrainConfig& config, const TrainOutputs& outputs = {});

/// history.csv: epoch,train_loss,val_loss,k,seconds,sweeps. With
/// `include_timing` false the seconds column is written as 0 so the file is
/// reproducible bit for bit.
std::string history_csv(const TrainHistory& history, bool include_timing);
std::string timing_csv(const TrainHistory& history);

ProblemInfo problem_info(const Dataset& dataset);

}  // namespace gsurr

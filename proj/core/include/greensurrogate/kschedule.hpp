#pragma once

#include <optional>
#include <string>

namespace gsurr {

enum class KStrategy { constant, dynamic, adaptive };

KStrategy k_strategy_from_string(const std::string& name);
std::string to_string(KStrategy strategy);

struct DynamicSchedule {
  int k0 = 40;
  int step = 10;
  int every = 20;  // epochs between reductions
  int floor = 10;

  bool operator==(const DynamicSchedule&) const = default;
};

struct AdaptiveSchedule {
  int k_init = 40;  // used for the first epoch only
  int k_min = 1;
  int k_max = 20;
  double increase_above = 1.2;  // double k when cur > 1.2 * prev
  double decrease_below = 0.8;  // halve k when cur < 0.8 * prev

  bool operator==(const AdaptiveSchedule&) const = default;
};

/// Number of Jacobi sweeps used to build loss targets, plus the bookkeeping
/// each strategy needs. `epoch` counts completed epochs.
struct KScheduleState {
  KStrategy strategy = KStrategy::constant;
  int constant_k = 20;
  DynamicSchedule dynamic{};
  AdaptiveSchedule adaptive{};
  int current_k = 20;
  std::optional<double> prev_val_loss;
  int epoch = 0;

  bool operator==(const KScheduleState&) const = default;
};

KScheduleState make_k_schedule(KStrategy strategy, int constant_k = 20, const DynamicSchedule& dynamic = {},
                               const AdaptiveSchedule& adaptive = {});

/// k for a 0-based epoch under the dynamic strategy.
int dynamic_k(const DynamicSchedule& s, int epoch) noexcept;

/// Advances the schedule after an epoch whose validation metric was `val_loss_cur`.
KScheduleState update_k(const KScheduleState& state, double val_loss_cur);

}  // namespace gsurr

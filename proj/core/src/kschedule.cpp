#include "greensurrogate/kschedule.hpp"

#include <algorithm>

#include "greensurrogate/error.hpp"

namespace gsurr {

KStrategy k_strategy_from_string(const std::string& name) {
  if (name == "constant") return KStrategy::constant;
  if (name == "dynamic") return KStrategy::dynamic;
  if (name == "adaptive") return KStrategy::adaptive;
  fail(ErrorKind::config, "unknown k strategy '" + name + "' (expected constant|dynamic|adaptive)");
}

std::string to_string(KStrategy strategy) {
  switch (strategy) {
    case KStrategy::constant: return "constant";
    case KStrategy::dynamic: return "dynamic";
    case KStrategy::adaptive: return "adaptive";
  }
  return "?";
}

int dynamic_k(const DynamicSchedule& s, int epoch) noexcept {
  return std::max(s.floor, s.k0 - s.step * (epoch / s.every));
}

KScheduleState make_k_schedule(KStrategy strategy, int constant_k, const DynamicSchedule& dynamic,
                               const AdaptiveSchedule& adaptive) {
  KScheduleState s;
  s.strategy = strategy;
  s.constant_k = constant_k;
  s.dynamic = dynamic;
  s.adaptive = adaptive;
  switch (strategy) {
    case KStrategy::constant:
      require(constant_k >= 1, "constant k must be at least 1");
      s.current_k = constant_k;
      break;
    case KStrategy::dynamic:
      require(dynamic.every >= 1 && dynamic.floor >= 1 && dynamic.step >= 0 && dynamic.k0 >= dynamic.floor,
              "invalid dynamic schedule");
      s.current_k = dynamic_k(dynamic, 0);
      break;
    case KStrategy::adaptive:
      require(adaptive.k_min >= 1 && adaptive.k_max >= adaptive.k_min && adaptive.k_init >= 1,
              "invalid adaptive schedule");
      require(adaptive.increase_above > 0.0 && adaptive.decrease_below > 0.0, "invalid adaptive thresholds");
      s.current_k = adaptive.k_init;
      break;
  }
  return s;
}

KScheduleState update_k(const KScheduleState& state, double val_loss_cur) {
  KScheduleState next = state;
  next.epoch = state.epoch + 1;
  switch (state.strategy) {
    case KStrategy::constant:
      break;
    case KStrategy::dynamic:
      next.current_k = dynamic_k(state.dynamic, next.epoch);
      break;
    case KStrategy::adaptive: {
      const AdaptiveSchedule& a = state.adaptive;
      int k = state.current_k;
      if (state.prev_val_loss) {
        const double prev = *state.prev_val_loss;
        if (val_loss_cur > a.increase_above * prev) {
          k *= 2;
        } else if (val_loss_cur < a.decrease_below * prev) {
          k /= 2;
        }
      }
      next.current_k = std::clamp(k, a.k_min, a.k_max);
      break;
    }
  }
  next.prev_val_loss = val_loss_cur;
  return next;
}

}  // namespace gsurr

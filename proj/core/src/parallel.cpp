#include "greensurrogate/parallel.hpp"

#include <cstdlib>
#include <string>

namespace gsurr {

int default_thread_count() {
  if (const char* env = std::getenv("GREEN_SURROGATE_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace gsurr

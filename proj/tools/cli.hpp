#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gsurr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitIo = 4;

/// Entry point behind the gsurr executable; args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gsurr::cli

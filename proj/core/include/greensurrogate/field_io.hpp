#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "greensurrogate/grid.hpp"

namespace gsurr {

/// Writes `bytes` to `path` through a sibling temporary file and a rename, so
/// readers never observe a partially written file.
void atomic_write(const std::filesystem::path& path, std::span<const char> bytes);
void atomic_write(const std::filesystem::path& path, const std::string& text);

std::string read_file(const std::filesystem::path& path);

/// FGF1 field files: the ASCII header line `FGF1 <n> <m> <x0> <y0> <L1> <L2>\n`
/// followed by n*m little-endian float64 values, i fastest.
std::string encode_fgf(const Field& field);
Field decode_fgf(std::string_view bytes);

void write_fgf(const std::filesystem::path& path, const Field& field);
Field read_fgf(const std::filesystem::path& path);

}  // namespace gsurr

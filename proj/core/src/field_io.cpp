#include "greensurrogate/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "greensurrogate/error.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <unistd.h>
#endif

namespace gsurr {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void put_le_double(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double get_le_double(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<double>(bits);
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

long process_tag() {
#if defined(__unix__) || defined(__APPLE__)
  return static_cast<long>(::getpid());
#else
  return 0;
#endif
}

}  // namespace

void atomic_write(const fs::path& path, std::span<const char> bytes) {
  const fs::path tmp = path.string() + ".tmp." + std::to_string(process_tag());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      fs::remove(tmp, ignored);
      fail(ErrorKind::io, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    fail(ErrorKind::io, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

void atomic_write(const fs::path& path, const std::string& text) {
  atomic_write(path, std::span<const char>(text.data(), text.size()));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "read failed for " + path.string());
  return std::move(ss).str();
}

std::string encode_fgf(const Field& field) {
  const Grid& g = field.grid();
  const RectDomain& d = g.domain();
  std::string out = "FGF1 " + std::to_string(g.n()) + " " + std::to_string(g.m()) + " " + format_real(d.x0) +
                    " " + format_real(d.y0) + " " + format_real(d.L1) + " " + format_real(d.L2) + "\n";
  out.reserve(out.size() + 8 * field.size());
  for (double v : field.values()) put_le_double(out, v);
  return out;
}

Field decode_fgf(std::string_view bytes) {
  const auto eol = bytes.find('\n');
  if (eol == std::string_view::npos || eol > 512) fail(ErrorKind::io, "FGF1: missing header line");
  std::istringstream header{std::string(bytes.substr(0, eol))};
  std::string magic;
  long n = 0;
  long m = 0;
  RectDomain d;
  header >> magic >> n >> m >> d.x0 >> d.y0 >> d.L1 >> d.L2;
  if (!header || magic != "FGF1") fail(ErrorKind::io, "FGF1: corrupt header");
  std::string trailing;
  if (header >> trailing) fail(ErrorKind::io, "FGF1: trailing header tokens");
  if (n < 3 || m < 3 || n > (1L << 20) || m > (1L << 20)) fail(ErrorKind::io, "FGF1: bad grid size in header");

  Grid grid;
  try {
    grid = build_grid(d, static_cast<int>(n), static_cast<int>(m));
  } catch (const Error& e) {
    fail(ErrorKind::io, std::string("FGF1: ") + e.what());
  }
  const std::size_t count = grid.size();
  const std::string_view payload = bytes.substr(eol + 1);
  if (payload.size() != 8 * count) {
    fail(ErrorKind::io, "FGF1: expected " + std::to_string(8 * count) + " payload bytes, found " +
                            std::to_string(payload.size()));
  }
  std::vector<double> values(count);
  for (std::size_t k = 0; k < count; ++k) values[k] = get_le_double(payload.data() + 8 * k);
  Field field(grid, std::move(values));
  if (!field.all_finite()) fail(ErrorKind::io, "FGF1: non-finite values");
  return field;
}

void write_fgf(const fs::path& path, const Field& field) {
  require(field.all_finite(), "refusing to write a field with non-finite values");
  atomic_write(path, encode_fgf(field));
}

Field read_fgf(const fs::path& path) { return decode_fgf(read_file(path)); }

}  // namespace gsurr

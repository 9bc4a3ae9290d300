#include "greensurrogate/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <json.hpp>

#include "greensurrogate/error.hpp"
#include "greensurrogate/field_io.hpp"

namespace gsurr {

using nlohmann::json;

namespace {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * b)) & 0xffu));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t& pos) {
  if (bytes.size() - pos < sizeof(T)) fail(ErrorKind::io, "checkpoint truncated");
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + b])) << (8 * b);
  pos += sizeof(T);
  return static_cast<T>(v);
}

json schedule_to_json(const KScheduleState& s) {
  json j = {{"strategy", to_string(s.strategy)},
            {"constant_k", s.constant_k},
            {"dynamic", {{"k0", s.dynamic.k0}, {"step", s.dynamic.step}, {"every", s.dynamic.every}, {"floor", s.dynamic.floor}}},
            {"adaptive",
             {{"k_init", s.adaptive.k_init},
              {"k_min", s.adaptive.k_min},
              {"k_max", s.adaptive.k_max},
              {"increase_above", s.adaptive.increase_above},
              {"decrease_below", s.adaptive.decrease_below}}},
            {"current_k", s.current_k},
            {"epoch", s.epoch},
            {"prev_val_loss", nullptr}};
  if (s.prev_val_loss) j["prev_val_loss"] = *s.prev_val_loss;
  return j;
}

KScheduleState schedule_from_json(const json& j) {
  KScheduleState s;
  s.strategy = k_strategy_from_string(j.at("strategy").get<std::string>());
  s.constant_k = j.at("constant_k").get<int>();
  const json& d = j.at("dynamic");
  s.dynamic = {d.at("k0").get<int>(), d.at("step").get<int>(), d.at("every").get<int>(), d.at("floor").get<int>()};
  const json& a = j.at("adaptive");
  s.adaptive = {a.at("k_init").get<int>(), a.at("k_min").get<int>(), a.at("k_max").get<int>(),
                a.at("increase_above").get<double>(), a.at("decrease_below").get<double>()};
  s.current_k = j.at("current_k").get<int>();
  s.epoch = j.at("epoch").get<int>();
  if (!j.at("prev_val_loss").is_null()) s.prev_val_loss = j.at("prev_val_loss").get<double>();
  return s;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const UNetConfig& c = ckpt.params.config;
  const ProblemInfo& p = ckpt.problem;
  json header = {
      {"config", {{"in_channels", c.in_channels}, {"first_channels", c.first_channels}, {"depth", c.depth}, {"kernel", 3},
                  {"n", c.n}, {"m", c.m}}},
      {"problem",
       {{"domain", {p.domain.x0, p.domain.y0, p.domain.L1, p.domain.L2}},
        {"coeffs", p.coeffs},
        {"coeffs_a", p.coeffs_a},
        {"coeffs_r", p.coeffs_r},
        {"sigma_factor", p.source.sigma_factor},
        {"margin_cells", p.source.margin_cells},
        {"source_seed", p.source.seed},
        {"variant", static_cast<int>(p.variant)}}},
      {"training",
       {{"epoch", ckpt.training.epoch},
        {"k_schedule", schedule_to_json(ckpt.training.k_schedule)},
        {"seed", ckpt.training.seed},
        {"val_metric", ckpt.training.val_metric}}},
  };
  const std::string text = header.dump();
  std::string out = "GSUN";
  put_le<std::uint32_t>(out, ckpt.version);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  put_le<std::uint64_t>(out, ckpt.params.values.size());
  out.reserve(out.size() + 8 * ckpt.params.values.size());
  for (double v : ckpt.params.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "GSUN") fail(ErrorKind::io, "not a checkpoint file (bad magic)");
  std::size_t pos = 4;
  Checkpoint ckpt;
  ckpt.version = get_le<std::uint32_t>(bytes, pos);
  if (ckpt.version != kCheckpointVersion) {
    fail(ErrorKind::io, "checkpoint version " + std::to_string(ckpt.version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = get_le<std::uint64_t>(bytes, pos);
  if (bytes.size() - pos < header_len) fail(ErrorKind::io, "checkpoint truncated in header");
  try {
    const json header = json::parse(bytes.substr(pos, header_len));
    pos += header_len;
    const json& c = header.at("config");
    if (c.at("kernel").get<int>() != 3) fail(ErrorKind::io, "checkpoint kernel size must be 3");
    ckpt.params.config = {c.at("in_channels").get<int>(), c.at("first_channels").get<int>(), c.at("depth").get<int>(),
                          c.at("n").get<int>(), c.at("m").get<int>()};
    const json& p = header.at("problem");
    ckpt.problem.domain = {p.at("domain").at(0).get<double>(), p.at("domain").at(1).get<double>(),
                           p.at("domain").at(2).get<double>(), p.at("domain").at(3).get<double>()};
    ckpt.problem.coeffs = p.at("coeffs").get<std::string>();
    ckpt.problem.coeffs_a = p.at("coeffs_a").get<std::string>();
    ckpt.problem.coeffs_r = p.at("coeffs_r").get<std::string>();
    ckpt.problem.source.sigma_factor = p.at("sigma_factor").get<double>();
    ckpt.problem.source.margin_cells = p.at("margin_cells").get<int>();
    ckpt.problem.source.seed = p.at("source_seed").get<std::uint64_t>();
    ckpt.problem.variant = input_variant_from_int(p.at("variant").get<int>());
    const json& t = header.at("training");
    ckpt.training.epoch = t.at("epoch").get<int>();
    ckpt.training.k_schedule = schedule_from_json(t.at("k_schedule"));
    ckpt.training.seed = t.at("seed").get<std::uint64_t>();
    ckpt.training.val_metric = t.at("val_metric").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorKind::io, std::string("corrupt checkpoint header: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    fail(ErrorKind::io, std::string("corrupt checkpoint header: ") + e.what());
  }

  std::size_t expected = 0;
  try {
    expected = param_count(ckpt.params.config);
  } catch (const Error& e) {
    fail(ErrorKind::io, std::string("checkpoint holds an invalid network config: ") + e.what());
  }
  const auto count = get_le<std::uint64_t>(bytes, pos);
  if (count != expected) fail(ErrorKind::io, "checkpoint parameter count does not match its config");
  if ((bytes.size() - pos) / 8 < count) fail(ErrorKind::io, "checkpoint truncated in parameters");
  if (bytes.size() - pos != 8 * count) fail(ErrorKind::io, "checkpoint has trailing bytes");
  ckpt.params.values.resize(count);
  for (std::size_t k = 0; k < count; ++k) ckpt.params.values[k] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  atomic_write(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

Checkpoint load_checkpoint(const std::filesystem::path& path, const UNetConfig& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!(ckpt.params.config == expected)) {
    fail(ErrorKind::config, "checkpoint " + path.string() + " was trained with a different network configuration");
  }
  return ckpt;
}

}  // namespace gsurr

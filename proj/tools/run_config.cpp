#include "run_config.hpp"

#include <initializer_list>
#include <json.hpp>

#include "greensurrogate/error.hpp"
#include "greensurrogate/field_io.hpp"

namespace gsurr::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::config, where + ": expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) fail(ErrorKind::config, where + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::config, where + "." + key + ": wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void parse_grid(const json& j, RunConfig& c) {
  check_keys(j, {"x0", "y0", "L1", "L2", "n", "m"}, "grid");
  read(j, "x0", c.domain.x0, "grid");
  read(j, "y0", c.domain.y0, "grid");
  read(j, "L1", c.domain.L1, "grid");
  read(j, "L2", c.domain.L2, "grid");
  read(j, "n", c.n, "grid");
  read(j, "m", c.m, "grid");
}

void parse_coeffs(const json& j, RunConfig& c) {
  if (j.is_string()) {
    c.coeffs = coefficients_by_name(j.get<std::string>());
    return;
  }
  check_keys(j, {"name", "a", "r"}, "coeffs");
  std::string name = "custom", a = "1", r = "0";
  read(j, "name", name, "coeffs");
  read(j, "a", a, "coeffs");
  read(j, "r", r, "coeffs");
  c.coeffs = name == "custom" ? custom_coefficients(a, r) : coefficients_by_name(name);
}

void parse_source(const json& j, RunConfig& c) {
  check_keys(j, {"sigma_factor", "margin_cells", "seed"}, "source");
  read(j, "sigma_factor", c.source.sigma_factor, "source");
  read(j, "margin_cells", c.source.margin_cells, "source");
  read(j, "seed", c.source.seed, "source");
}

void parse_dataset(const json& j, RunConfig& c, const std::filesystem::path& base) {
  check_keys(j, {"n_train", "n_val", "train_references", "reference", "dir"}, "dataset");
  read(j, "n_train", c.n_train, "dataset");
  read(j, "n_val", c.n_val, "dataset");
  read(j, "train_references", c.train_references, "dataset");
  if (j.contains("dir")) c.data_dir = resolve(base, j.at("dir").get<std::string>());
  if (j.contains("reference")) {
    const json& r = j.at("reference");
    check_keys(r, {"solver", "tol", "max_iter"}, "dataset.reference");
    std::string solver = to_string(c.reference.solver);
    read(r, "solver", solver, "dataset.reference");
    c.reference.solver = reference_solver_from_string(solver);
    read(r, "tol", c.reference.tol, "dataset.reference");
    read(r, "max_iter", c.reference.max_iter, "dataset.reference");
  }
}

void parse_network(const json& j, RunConfig& c) {
  check_keys(j, {"first_channels", "depth"}, "network");
  read(j, "first_channels", c.first_channels, "network");
  read(j, "depth", c.depth, "network");
}

void parse_train(const json& j, RunConfig& c) {
  check_keys(j,
             {"epochs", "batch_size", "learning_rate", "loss", "k_strategy", "k", "seed", "deterministic", "threads",
              "dynamic", "adaptive"},
             "train");
  TrainConfig& t = c.train;
  read(j, "epochs", t.epochs, "train");
  read(j, "batch_size", t.batch_size, "train");
  read(j, "learning_rate", t.optimizer.learning_rate, "train");
  read(j, "seed", t.seed, "train");
  read(j, "deterministic", t.deterministic, "train");
  read(j, "threads", t.threads, "train");
  std::string loss = to_string(t.loss);
  read(j, "loss", loss, "train");
  t.loss = loss_kind_from_string(loss);

  std::string strategy = to_string(t.schedule.strategy);
  int k = t.schedule.constant_k;
  DynamicSchedule dyn = t.schedule.dynamic;
  AdaptiveSchedule ada = t.schedule.adaptive;
  read(j, "k_strategy", strategy, "train");
  read(j, "k", k, "train");
  if (j.contains("dynamic")) {
    const json& d = j.at("dynamic");
    check_keys(d, {"k0", "step", "every", "floor"}, "train.dynamic");
    read(d, "k0", dyn.k0, "train.dynamic");
    read(d, "step", dyn.step, "train.dynamic");
    read(d, "every", dyn.every, "train.dynamic");
    read(d, "floor", dyn.floor, "train.dynamic");
  }
  if (j.contains("adaptive")) {
    const json& a = j.at("adaptive");
    check_keys(a, {"k_init", "k_min", "k_max", "increase_above", "decrease_below"}, "train.adaptive");
    read(a, "k_init", ada.k_init, "train.adaptive");
    read(a, "k_min", ada.k_min, "train.adaptive");
    read(a, "k_max", ada.k_max, "train.adaptive");
    read(a, "increase_above", ada.increase_above, "train.adaptive");
    read(a, "decrease_below", ada.decrease_below, "train.adaptive");
  }
  t.schedule = make_k_schedule(k_strategy_from_string(strategy), k, dyn, ada);
}

}  // namespace

Grid RunConfig::grid() const { return build_grid(domain, n, m); }

UNetConfig RunConfig::net_config() const {
  UNetConfig c;
  c.in_channels = channel_count(variant);
  c.first_channels = first_channels;
  c.depth = depth;
  c.n = n;
  c.m = m;
  return c;
}

DatasetSpec RunConfig::dataset_spec() const {
  DatasetSpec s{grid(), coeffs, source};
  s.variant = variant;
  s.n_train = n_train;
  s.n_val = n_val;
  s.train_references = train_references;
  s.reference = reference;
  return s;
}

namespace {

RunConfig parse_document(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"grid", "coeffs", "source", "input_variant", "dataset", "network", "train", "output"}, "config");
  RunConfig c;
  if (j.contains("grid")) parse_grid(j.at("grid"), c);
  if (j.contains("coeffs")) parse_coeffs(j.at("coeffs"), c);
  if (j.contains("source")) parse_source(j.at("source"), c);
  if (j.contains("input_variant")) {
    int v = 1;
    read(j, "input_variant", v, "config");
    c.variant = input_variant_from_int(v);
  }
  if (j.contains("dataset")) parse_dataset(j.at("dataset"), c, base_dir);
  if (j.contains("network")) parse_network(j.at("network"), c);
  if (j.contains("train")) parse_train(j.at("train"), c);
  if (j.contains("output")) c.output_dir = resolve(base_dir, j.at("output").get<std::string>());

  (void)c.grid();
  c.source.validate();
  c.net_config().validate();
  c.train.validate();
  if (c.n_train < 1 || c.n_val < 1) fail(ErrorKind::config, "dataset: n_train and n_val must be >= 1");
  return c;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  try {
    return parse_document(text, base_dir);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) fail(ErrorKind::config, e.what());
    throw;
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.parent_path());
}

}  // namespace gsurr::cli

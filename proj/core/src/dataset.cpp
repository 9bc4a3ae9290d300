#include "greensurrogate/dataset.hpp"

#include <json.hpp>
#include <system_error>

#include "greensurrogate/error.hpp"
#include "greensurrogate/field_io.hpp"
#include "greensurrogate/parallel.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <unistd.h>
#endif

namespace gsurr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kValidationStream = std::uint64_t{1} << 40;

}  // namespace

ReferenceSolver reference_solver_from_string(const std::string& name) {
  if (name == "jacobi") return ReferenceSolver::jacobi;
  if (name == "direct") return ReferenceSolver::direct;
  fail(ErrorKind::config, "unknown reference solver '" + name + "' (expected jacobi|direct)");
}

std::string to_string(ReferenceSolver solver) { return solver == ReferenceSolver::jacobi ? "jacobi" : "direct"; }

Field reference_solution(const StencilCoeffs& stencil, const Field& rho, const ReferenceOptions& options,
                         const FactorizedOperator* factorized) {
  if (options.solver == ReferenceSolver::direct) {
    require(factorized != nullptr, "direct reference solutions need a factorized operator");
    return factorized->solve(rho);
  }
  JacobiResult r = jacobi_solve(stencil, rho, Field(stencil.grid()), ToTolerance{options.tol, options.max_iter});
  if (!r.converged) {
    fail(ErrorKind::numeric, "reference Jacobi solve did not reach tol " + std::to_string(options.tol) + " in " +
                                 std::to_string(options.max_iter) + " sweeps (residual " +
                                 std::to_string(r.residual_norm) + ")");
  }
  return std::move(r.field);
}

CoefficientSpec coefficients_from_description(const std::string& name, const std::string& a_expr,
                                              const std::string& r_expr) {
  if (name == "custom") return custom_coefficients(a_expr, r_expr);
  return coefficients_by_name(name);
}

Dataset generate_dataset(const DatasetSpec& spec, int threads) {
  spec.source.validate();
  require(spec.n_train >= 1, "n_train must be at least 1");
  require(spec.n_val >= 1, "n_val must be at least 1");
  const StencilCoeffs stencil = assemble_stencil(spec.grid, spec.coeffs);
  std::optional<FactorizedOperator> factorized;
  if (spec.reference.solver == ReferenceSolver::direct) factorized.emplace(stencil);

  Dataset ds;
  ds.grid = spec.grid;
  ds.coeffs = spec.coeffs.name;
  ds.coeffs_a = spec.coeffs.a_expr;
  ds.coeffs_r = spec.coeffs.r_expr;
  ds.source = spec.source;
  ds.variant = spec.variant;
  ds.reference = spec.reference;

  const double sigma = source_sigma(spec.grid, spec.source);
  auto build = [&](const std::vector<Point>& points, bool with_reference) {
    std::vector<SourceSample> samples(points.size());
    parallel_for(points.size(), threads, [&](std::size_t k, std::size_t) {
      SourceSample& s = samples[k];
      s.xi = points[k];
      s.rho = gaussian_source(spec.grid, s.xi, sigma);
      s.input = build_input(spec.grid, s.xi, spec.variant, spec.source);
      if (with_reference) {
        s.reference = reference_solution(stencil, s.rho, spec.reference, factorized ? &*factorized : nullptr);
      }
    });
    return samples;
  };
  ds.train = build(sample_sources(spec.grid, spec.n_train, spec.source, 0), spec.train_references);
  ds.val = build(sample_sources(spec.grid, spec.n_val, spec.source, kValidationStream), true);
  return ds;
}

void save_dataset(const fs::path& dir, const Dataset& dataset) {
  std::error_code ec;
#if defined(__unix__) || defined(__APPLE__)
  const fs::path staging = dir.string() + ".tmp." + std::to_string(::getpid());
#else
  const fs::path staging = dir.string() + ".tmp";
#endif
  fs::remove_all(staging, ec);
  if (!fs::create_directories(staging, ec) || ec) {
    fail(ErrorKind::io, "cannot create staging directory " + staging.string());
  }
  try {
    const RectDomain& d = dataset.grid.domain();
    json manifest;
    manifest["format"] = "gsurr-dataset";
    manifest["version"] = 1;
    manifest["grid"] = {{"x0", d.x0}, {"y0", d.y0}, {"L1", d.L1}, {"L2", d.L2},
                        {"n", dataset.grid.n()}, {"m", dataset.grid.m()}};
    manifest["coeffs"] = {{"name", dataset.coeffs}, {"a", dataset.coeffs_a}, {"r", dataset.coeffs_r}};
    manifest["source"] = {{"sigma_factor", dataset.source.sigma_factor},
                          {"margin_cells", dataset.source.margin_cells},
                          {"seed", dataset.source.seed}};
    manifest["variant"] = static_cast<int>(dataset.variant);
    manifest["reference"] = {{"solver", to_string(dataset.reference.solver)},
                             {"tol", dataset.reference.tol},
                             {"max_iter", dataset.reference.max_iter}};
    std::size_t index = 0;
    auto write_split = [&](const std::vector<SourceSample>& samples) {
      json entries = json::array();
      for (const SourceSample& s : samples) {
        const std::string rho_name = "rho_" + std::to_string(index) + ".fgf";
        write_fgf(staging / rho_name, s.rho);
        json entry = {{"index", index}, {"xi", {s.xi.x, s.xi.y}}, {"rho", rho_name}, {"ref", nullptr}};
        if (s.reference) {
          const std::string ref_name = "ref_" + std::to_string(index) + ".fgf";
          write_fgf(staging / ref_name, *s.reference);
          entry["ref"] = ref_name;
        }
        entries.push_back(std::move(entry));
        ++index;
      }
      return entries;
    };
    manifest["train"] = write_split(dataset.train);
    manifest["val"] = write_split(dataset.val);
    atomic_write(staging / "manifest.json", manifest.dump(2) + "\n");

    fs::remove_all(dir, ec);
    fs::rename(staging, dir, ec);
    if (ec) fail(ErrorKind::io, "cannot move dataset into " + dir.string() + ": " + ec.message());
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
}

Dataset load_dataset(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    fail(ErrorKind::io, "corrupt dataset manifest in " + dir.string() + ": " + e.what());
  }
  try {
    if (manifest.at("format") != "gsurr-dataset" || manifest.at("version") != 1) {
      fail(ErrorKind::io, "unsupported dataset format in " + dir.string());
    }
    Dataset ds;
    const json& g = manifest.at("grid");
    ds.grid = build_grid({g.at("x0").get<double>(), g.at("y0").get<double>(), g.at("L1").get<double>(),
                          g.at("L2").get<double>()},
                         g.at("n").get<int>(), g.at("m").get<int>());
    ds.coeffs = manifest.at("coeffs").at("name").get<std::string>();
    ds.coeffs_a = manifest.at("coeffs").at("a").get<std::string>();
    ds.coeffs_r = manifest.at("coeffs").at("r").get<std::string>();
    const json& src = manifest.at("source");
    ds.source.sigma_factor = src.at("sigma_factor").get<double>();
    ds.source.margin_cells = src.at("margin_cells").get<int>();
    ds.source.seed = src.at("seed").get<std::uint64_t>();
    ds.variant = input_variant_from_int(manifest.at("variant").get<int>());
    const json& ref = manifest.at("reference");
    ds.reference.solver = reference_solver_from_string(ref.at("solver").get<std::string>());
    ds.reference.tol = ref.at("tol").get<double>();
    ds.reference.max_iter = ref.at("max_iter").get<long>();

    auto read_split = [&](const json& entries) {
      std::vector<SourceSample> samples;
      for (const json& e : entries) {
        SourceSample s;
        s.xi = {e.at("xi").at(0).get<double>(), e.at("xi").at(1).get<double>()};
        s.rho = read_fgf(dir / e.at("rho").get<std::string>());
        require_same_grid(ds.grid, s.rho.grid(), "dataset rho file");
        s.input = build_input(ds.grid, s.xi, ds.variant, ds.source);
        if (!e.at("ref").is_null()) {
          s.reference = read_fgf(dir / e.at("ref").get<std::string>());
          require_same_grid(ds.grid, s.reference->grid(), "dataset reference file");
        }
        samples.push_back(std::move(s));
      }
      return samples;
    };
    ds.train = read_split(manifest.at("train"));
    ds.val = read_split(manifest.at("val"));
    return ds;
  } catch (const json::exception& e) {
    fail(ErrorKind::io, "malformed dataset manifest in " + dir.string() + ": " + e.what());
  }
}

}  // namespace gsurr

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "greensurrogate/operator.hpp"
#include "greensurrogate/source.hpp"

namespace gsurr {

enum class ReferenceSolver { jacobi, direct };

ReferenceSolver reference_solver_from_string(const std::string& name);
std::string to_string(ReferenceSolver solver);

/// How converged reference Green's functions are produced.
struct ReferenceOptions {
  ReferenceSolver solver = ReferenceSolver::jacobi;
  double tol = 1e-10;  // mesh-weighted interior residual
  long max_iter = 5'000'000;
};

/// Solves L_h G = rho to convergence. `factorized` is used (and required)
/// when options.solver is direct.
Field reference_solution(const StencilCoeffs& stencil, const Field& rho, const ReferenceOptions& options,
                         const FactorizedOperator* factorized = nullptr);

struct SourceSample {
  Point xi;
  Field rho;
  InputTensor input;
  std::optional<Field> reference;
};

struct DatasetSpec {
  Grid grid;
  CoefficientSpec coeffs;
  SourceConfig source;
  InputVariant variant = InputVariant::rho;
  int n_train = 2000;
  int n_val = 100;
  bool train_references = false;  // validation samples always carry references
  ReferenceOptions reference;
};

struct Dataset {
  Grid grid;
  std::string coeffs;  // CoefficientSpec::describe()
  std::string coeffs_a;
  std::string coeffs_r;
  SourceConfig source;
  InputVariant variant = InputVariant::rho;
  ReferenceOptions reference;
  std::vector<SourceSample> train;
  std::vector<SourceSample> val;
};

/// Training points come from substreams [0, n_train) of source.seed and
/// validation points from a disjoint block, so the two sets never share draws.
Dataset generate_dataset(const DatasetSpec& spec, int threads = 1);

/// Writes manifest.json plus rho_<idx>.fgf / ref_<idx>.fgf into `dir`.
/// Files are staged in a temporary sibling directory and moved into place.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir);

CoefficientSpec coefficients_from_description(const std::string& name, const std::string& a_expr,
                                              const std::string& r_expr);

}  // namespace gsurr

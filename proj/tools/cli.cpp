#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <ostream>
#include <sstream>
#include <json.hpp>

#include "greensurrogate/error.hpp"
#include "greensurrogate/expression.hpp"
#include "greensurrogate/field_io.hpp"
#include "greensurrogate/greensolver.hpp"
#include "greensurrogate/parallel.hpp"
#include "run_config.hpp"

namespace gsurr::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kE2Definition = "e2 = sqrt(h1*h2*sum over all nodes of (u - u_ref)^2)";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int resolve_threads(int requested) { return requested > 0 ? requested : default_thread_count(); }

Point parse_point(const std::string& text) {
  double x = 0.0, y = 0.0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf,%lf%c", &x, &y, &tail) != 2) {
    fail(ErrorKind::config, "expected a point as 'x,y', got '" + text + "'");
  }
  return {x, y};
}

std::pair<int, int> parse_grid_size(const std::string& text) {
  int n = 0, m = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%dx%d%c", &n, &m, &tail) != 2) {
    fail(ErrorKind::config, "expected a grid size as 'NxM', got '" + text + "'");
  }
  return {n, m};
}

RectDomain parse_domain(const std::string& text) {
  RectDomain d;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf%c", &d.x0, &d.y0, &d.L1, &d.L2, &tail) != 4) {
    fail(ErrorKind::config, "expected a domain as 'x0,y0,L1,L2', got '" + text + "'");
  }
  return d;
}

std::string contour_csv(const Field& u) {
  const Grid& g = u.grid();
  std::string out = "x,y,u\n";
  out.reserve(g.size() * 64);
  for (int j = 0; j < g.m(); ++j) {
    for (int i = 0; i < g.n(); ++i) out += fmt17(g.x(i)) + "," + fmt17(g.y(j)) + "," + fmt17(u(i, j)) + "\n";
  }
  return out;
}

// gen-data

struct GenDataArgs {
  std::string config;
  std::string out;
  int threads = 0;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  const RunConfig cfg = load_run_config(a.config);
  fs::path dir = a.out.empty() ? cfg.data_dir.value_or(fs::path()) : fs::path(a.out);
  if (dir.empty()) fail(ErrorKind::config, "gen-data: no output directory (use --out or dataset.dir)");
  const Dataset ds = generate_dataset(cfg.dataset_spec(), resolve_threads(a.threads));
  save_dataset(dir, ds);
  out << "wrote " << ds.train.size() << " train + " << ds.val.size() << " val samples to " << dir.string() << "\n";
  return kExitOk;
}

// train

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string loss;
  std::string k_strategy;
  int k = 0;
  int epochs = 0;
  long long seed = -1;
  int threads = 0;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = load_run_config(a.config);
  TrainConfig tc = cfg.train;
  if (!a.loss.empty()) tc.loss = loss_kind_from_string(a.loss);
  if (!a.k_strategy.empty() || a.k > 0) {
    const KStrategy strategy = a.k_strategy.empty() ? tc.schedule.strategy : k_strategy_from_string(a.k_strategy);
    tc.schedule = make_k_schedule(strategy, a.k > 0 ? a.k : tc.schedule.constant_k, tc.schedule.dynamic,
                                  tc.schedule.adaptive);
  }
  if (a.epochs > 0) tc.epochs = a.epochs;
  if (a.seed >= 0) tc.seed = static_cast<std::uint64_t>(a.seed);
  if (a.threads > 0) tc.threads = a.threads;
  tc.validate();

  const fs::path out_dir = a.out.empty() ? cfg.output_dir.value_or(fs::path()) : fs::path(a.out);
  if (out_dir.empty()) fail(ErrorKind::config, "train: no output directory (use --out or output)");

  Dataset ds;
  const std::optional<fs::path> data_dir = a.data.empty() ? cfg.data_dir : std::optional<fs::path>(a.data);
  if (data_dir && fs::exists(*data_dir / "manifest.json")) {
    ds = load_dataset(*data_dir);
  } else if (!a.data.empty()) {
    fail(ErrorKind::io, "train: no dataset at " + a.data);
  } else {
    ds = generate_dataset(cfg.dataset_spec(), tc.threads);
  }
  UNetConfig net = cfg.net_config();
  net.n = ds.grid.n();
  net.m = ds.grid.m();
  net.in_channels = channel_count(ds.variant);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + out_dir.string() + ": " + ec.message());

  const CoefficientSpec coeffs = coefficients_from_description(ds.coeffs, ds.coeffs_a, ds.coeffs_r);
  const StencilCoeffs stencil = assemble_stencil(ds.grid, coeffs);
  TrainOutputs outputs;
  outputs.directory = out_dir;
  outputs.problem = problem_info(ds);
  if (!a.quiet) {
    outputs.on_epoch = [&out](const EpochRecord& r) {
      out << "epoch " << r.epoch << " k=" << r.k << " train=" << fmt(r.train_loss) << " val=" << fmt(r.val_loss)
          << " (" << fmt(r.seconds) << " s)\n"
          << std::flush;
    };
  }
  const TrainResult result = train(stencil, ds, net, tc, outputs);
  out << "best epoch " << result.best_epoch << " val=" << fmt(result.best_val) << "; outputs in " << out_dir.string()
      << "\n";
  return kExitOk;
}

// eval-green

struct EvalGreenArgs {
  std::string checkpoint;
  std::vector<std::string> xi;
  std::string out;
  std::string reference_solver = "direct";
  double tol = 1e-10;
  int threads = 0;
};

int cmd_eval_green(const EvalGreenArgs& a, std::ostream& out) {
  const LearnedProvider learned(load_checkpoint(a.checkpoint));
  const ProblemInfo& problem = learned.checkpoint().problem;
  const CoefficientSpec coeffs = coefficients_from_description(problem.coeffs, problem.coeffs_a, problem.coeffs_r);
  ReferenceOptions ro;
  ro.solver = reference_solver_from_string(a.reference_solver);
  ro.tol = a.tol;
  const ReferenceProvider reference(learned.grid(), coeffs, problem.source, ro);

  std::vector<Point> points;
  for (const std::string& s : a.xi) points.push_back(parse_point(s));
  if (points.empty()) points = {{0.0, 0.0}, {-0.75, -0.75}, {0.5, 0.0}};
  for (const Point& p : points) {
    if (!learned.grid().domain().contains(p)) {
      fail(ErrorKind::config, "xi (" + fmt17(p.x) + "," + fmt17(p.y) + ") lies outside the checkpoint's domain");
    }
  }

  const fs::path dir = a.out.empty() ? fs::path(".") : fs::path(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<double> e2(points.size());
  std::vector<Field> learned_fields(points.size()), reference_fields(points.size());
  parallel_for(points.size(), resolve_threads(a.threads), [&](std::size_t k, std::size_t) {
    learned_fields[k] = learned.green(points[k]);
    reference_fields[k] = reference.green(points[k]);
    e2[k] = l2_error(learned_fields[k], reference_fields[k]);
  });

  std::string report = "# " + std::string(kE2Definition) + "\nxi1,xi2,e2\n";
  out << kE2Definition << "\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    write_fgf(dir / ("learned_" + std::to_string(k) + ".fgf"), learned_fields[k]);
    write_fgf(dir / ("reference_" + std::to_string(k) + ".fgf"), reference_fields[k]);
    report += fmt17(points[k].x) + "," + fmt17(points[k].y) + "," + fmt17(e2[k]) + "\n";
    out << "xi=(" << points[k].x << "," << points[k].y << ") e2=" << fmt(e2[k]) << "\n";
  }
  atomic_write(dir / "report.csv", report);
  return kExitOk;
}

// solve

struct SolveArgs {
  std::string provider = "reference";
  std::string case_name;
  std::string f_expr;
  std::string g_expr;
  std::string exact_expr;
  std::string coeffs;
  std::string a_expr = "1";
  std::string r_expr = "0";
  std::string grid;
  std::string domain = "-1,-1,2,2";
  double sigma_factor = 0.0;
  std::string reference_solver = "direct";
  double tol = 1e-10;
  std::string out;
  std::string report;
  std::string contour;
  int threads = 0;
};

BVP bvp_from_args(const SolveArgs& a) {
  if (!a.case_name.empty()) {
    if (!a.f_expr.empty() || !a.g_expr.empty()) fail(ErrorKind::config, "solve: give either --case or --f-expr/--g-expr");
    BVP bvp = named_case(a.case_name);
    if (!a.coeffs.empty()) {
      const CoefficientSpec given = a.coeffs == "custom" ? custom_coefficients(a.a_expr, a.r_expr)
                                                         : coefficients_by_name(a.coeffs);
      if (given.describe() != bvp.coeffs.describe()) {
        fail(ErrorKind::config, "solve: case '" + a.case_name + "' is defined for coefficients '" +
                                    bvp.coeffs.describe() + "', not '" + given.describe() + "'");
      }
    }
    return bvp;
  }
  if (a.f_expr.empty()) fail(ErrorKind::config, "solve: need --case or --f-expr");
  BVP bvp;
  bvp.name = "custom";
  const std::string coeffs = a.coeffs.empty() ? "laplace" : a.coeffs;
  bvp.coeffs = coeffs == "custom" ? custom_coefficients(a.a_expr, a.r_expr) : coefficients_by_name(coeffs);
  auto f = std::make_shared<Expression>(Expression::parse(a.f_expr));
  bvp.f = [f](double x, double y) { return (*f)(x, y); };
  if (a.g_expr.empty()) {
    bvp.g = [](double, double) { return 0.0; };
    bvp.homogeneous = true;
  } else {
    auto g = std::make_shared<Expression>(Expression::parse(a.g_expr));
    bvp.g = [g](double x, double y) { return (*g)(x, y); };
  }
  if (!a.exact_expr.empty()) {
    auto u = std::make_shared<Expression>(Expression::parse(a.exact_expr));
    bvp.exact = [u](double x, double y) { return (*u)(x, y); };
  }
  return bvp;
}

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  if (!a.report.empty() && a.report != "e2") fail(ErrorKind::config, "solve: --report supports only 'e2'");
  const BVP bvp = bvp_from_args(a);
  if (a.report == "e2" && !bvp.exact) fail(ErrorKind::config, "solve: --report e2 needs an exact solution");

  std::unique_ptr<GreenProvider> provider;
  const std::string ckpt_prefix = "checkpoint:";
  if (a.provider == "reference") {
    const auto [n, m] = a.grid.empty() ? std::pair<int, int>{64, 64} : parse_grid_size(a.grid);
    SourceConfig source = solver_source_config();
    if (a.sigma_factor > 0.0) source.sigma_factor = a.sigma_factor;
    ReferenceOptions ro;
    ro.solver = reference_solver_from_string(a.reference_solver);
    ro.tol = a.tol;
    provider = std::make_unique<ReferenceProvider>(build_grid(parse_domain(a.domain), n, m), bvp.coeffs, source, ro);
  } else if (a.provider.rfind(ckpt_prefix, 0) == 0) {
    auto learned = std::make_unique<LearnedProvider>(load_checkpoint(a.provider.substr(ckpt_prefix.size())));
    if (!a.grid.empty()) {
      const auto [n, m] = parse_grid_size(a.grid);
      if (n != learned->grid().n() || m != learned->grid().m()) {
        fail(ErrorKind::config, "solve: --grid " + a.grid + " does not match the checkpoint grid " +
                                    std::to_string(learned->grid().n()) + "x" + std::to_string(learned->grid().m()));
      }
    }
    provider = std::move(learned);
  } else {
    fail(ErrorKind::config, "solve: --provider must be 'reference' or 'checkpoint:<path>'");
  }

  const Field u = solve_bvp(*provider, bvp, resolve_threads(a.threads));
  if (!a.out.empty()) write_fgf(a.out, u);
  if (!a.contour.empty()) atomic_write(a.contour, contour_csv(u));
  if (bvp.exact) {
    const double e2 = l2_error(u, sample_exact(u.grid(), bvp.exact));
    if (a.report == "e2") out << kE2Definition << "\n";
    out << "case " << bvp.name << " e2 " << fmt(e2) << "\n";
  }
  return kExitOk;
}

// param-count

struct ParamCountArgs {
  int in_channels = 1;
  int first_channels = 32;
  int depth = 4;
  int n = 64;
  int m = 64;
};

int cmd_param_count(const ParamCountArgs& a, std::ostream& out) {
  UNetConfig c;
  c.in_channels = a.in_channels;
  c.first_channels = a.first_channels;
  c.depth = a.depth;
  c.n = a.n;
  c.m = a.m;
  c.validate();
  out << param_count(c) << "\n";
  return kExitOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io:
      return kExitIo;
    case ErrorKind::divergence:
    case ErrorKind::numeric:
      return kExitDivergence;
    case ErrorKind::invalid_argument:
    case ErrorKind::config:
      break;
  }
  return kExitConfig;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural Green's function surrogate: data generation, training, evaluation and BVP solving", "gsurr"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Sample sources and write a dataset directory");
  gen_cmd->add_option("--config", gen.config, "Run configuration (JSON)")->required();
  gen_cmd->add_option("--out", gen.out, "Dataset directory (overrides dataset.dir)");
  gen_cmd->add_option("--threads", gen.threads, "Worker threads (default: GREEN_SURROGATE_THREADS or all cores)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a network; writes best.gsun, final.gsun, history.csv");
  train_cmd->add_option("--config", tr.config, "Run configuration (JSON)")->required();
  train_cmd->add_option("--data", tr.data, "Dataset directory (default: dataset.dir, else generated in memory)");
  train_cmd->add_option("--out", tr.out, "Output directory (overrides output)");
  train_cmd->add_option("--loss", tr.loss, "residual | jacobi | data");
  train_cmd->add_option("--k-strategy", tr.k_strategy, "constant | dynamic | adaptive");
  train_cmd->add_option("--k", tr.k, "Sweeps for the constant strategy");
  train_cmd->add_option("--epochs", tr.epochs, "Override the epoch count");
  train_cmd->add_option("--seed", tr.seed, "Override the training seed");
  train_cmd->add_option("--threads", tr.threads, "Worker threads");
  train_cmd->add_flag("--quiet", tr.quiet, "Do not print per-epoch lines");

  EvalGreenArgs ev;
  auto* eval_cmd = app.add_subcommand("eval-green", "Compare learned and reference Green's functions");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint (.gsun)")->required();
  eval_cmd->add_option("--xi", ev.xi, "Source point 'x,y' (repeatable; default: the three probe points)");
  eval_cmd->add_option("--out", ev.out, "Output directory for fields and report.csv");
  eval_cmd->add_option("--reference-solver", ev.reference_solver, "direct | jacobi");
  eval_cmd->add_option("--tol", ev.tol, "Reference residual tolerance");
  eval_cmd->add_option("--threads", ev.threads, "Worker threads");

  SolveArgs sv;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a Dirichlet problem with a Green's function provider");
  solve_cmd->add_option("--provider", sv.provider, "reference | checkpoint:<path>");
  solve_cmd->add_option("--case", sv.case_name, "poisson-sin<l> | poisson-cos | rd1-gauss");
  solve_cmd->add_option("--f-expr", sv.f_expr, "Source term f(x1,x2)");
  solve_cmd->add_option("--g-expr", sv.g_expr, "Boundary data g(x1,x2) (default 0)");
  solve_cmd->add_option("--exact-expr", sv.exact_expr, "Exact solution for the e2 report");
  solve_cmd->add_option("--coeffs", sv.coeffs, "laplace | rd1 | custom");
  solve_cmd->add_option("--a-expr", sv.a_expr, "Diffusion a(x1,x2) for custom coefficients");
  solve_cmd->add_option("--r-expr", sv.r_expr, "Reaction r(x1,x2) for custom coefficients");
  solve_cmd->add_option("--grid", sv.grid, "Grid size NxM (reference provider; default 64x64)");
  solve_cmd->add_option("--domain", sv.domain, "x0,y0,L1,L2 (reference provider)");
  solve_cmd->add_option("--sigma-factor", sv.sigma_factor, "Source width in cells (reference provider; default 0.5)");
  solve_cmd->add_option("--reference-solver", sv.reference_solver, "direct | jacobi");
  solve_cmd->add_option("--tol", sv.tol, "Jacobi tolerance for the reference provider");
  solve_cmd->add_option("--out", sv.out, "Solution field (FGF1)");
  solve_cmd->add_option("--report", sv.report, "e2");
  solve_cmd->add_option("--contour", sv.contour, "CSV with columns x,y,u");
  solve_cmd->add_option("--threads", sv.threads, "Worker threads");

  ParamCountArgs pc;
  auto* pc_cmd = app.add_subcommand("param-count", "Print the number of trainable parameters");
  pc_cmd->add_option("--in-channels", pc.in_channels);
  pc_cmd->add_option("--first-channels", pc.first_channels);
  pc_cmd->add_option("--depth", pc.depth);
  pc_cmd->add_option("--n", pc.n);
  pc_cmd->add_option("--m", pc.m);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, out);
    if (*train_cmd) return cmd_train(tr, out);
    if (*eval_cmd) return cmd_eval_green(ev, out);
    if (*solve_cmd) return cmd_solve(sv, out);
    if (*pc_cmd) return cmd_param_count(pc, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace gsurr::cli

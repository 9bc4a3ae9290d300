#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "greensurrogate/error.hpp"
#include "greensurrogate/field_io.hpp"
#include "greensurrogate/trainer.hpp"

using namespace gsurr;
namespace fs = std::filesystem;

namespace {

const RectDomain kSquare{-1.0, -1.0, 2.0, 2.0};

Dataset tiny_dataset(bool train_refs = false) {
  SourceConfig src;
  src.seed = 3;
  DatasetSpec spec{build_grid(kSquare, 8, 8), laplace_coefficients(), src};
  spec.n_train = 10;
  spec.n_val = 4;
  spec.train_references = train_refs;
  spec.reference.solver = ReferenceSolver::direct;
  return generate_dataset(spec);
}

UNetConfig tiny_net() {
  UNetConfig c;
  c.first_channels = 2;
  c.depth = 2;
  c.n = 8;
  c.m = 8;
  return c;
}

TrainConfig tiny_train(int epochs = 3) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 4;
  t.seed = 11;
  t.optimizer.learning_rate = 3e-3;
  return t;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST(Adam, FirstStepIsSignedLearningRate) {
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  AdamOptimizer adam(cfg, 3);
  std::vector<double> p{1.0, 2.0, 3.0};
  const std::vector<double> g{0.5, -2.0, 0.0};
  adam.step(p, g);
  // bias-corrected moments are g and g^2, so the step is lr * g / (|g| + eps)
  EXPECT_NEAR(p[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p[1], 2.0 + 0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_EQ(p[2], 3.0);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Adam, SecondStepMatchesHandComputation) {
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  AdamOptimizer adam(cfg, 1);
  std::vector<double> p{0.0};
  adam.step(p, std::vector<double>{1.0});
  adam.step(p, std::vector<double>{3.0});
  const double m = 0.9 * 0.1 * 1.0 + 0.1 * 3.0;
  const double v = 0.999 * 0.001 * 1.0 + 0.001 * 9.0;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  const double expected = -0.01 * 1.0 / (1.0 + 1e-8) - 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
  EXPECT_NEAR(p[0], expected, 1e-15);
}

TEST(Trainer, ConfigValidation) {
  TrainConfig t;
  t.epochs = 0;
  EXPECT_THROW(t.validate(), Error);
  t = TrainConfig{};
  t.batch_size = 0;
  EXPECT_THROW(t.validate(), Error);
  t = TrainConfig{};
  t.optimizer.learning_rate = -1.0;
  EXPECT_THROW(t.validate(), Error);
}

TEST(Trainer, HistoryAndOutputs) {
  const Dataset ds = tiny_dataset();
  const StencilCoeffs st = assemble_stencil(ds.grid, laplace_coefficients());
  const fs::path dir = fs::temp_directory_path() / "gsurr_test_train";
  fs::remove_all(dir);
  fs::create_directories(dir);
  TrainOutputs out;
  out.directory = dir;
  out.problem = problem_info(ds);
  int callbacks = 0;
  out.on_epoch = [&](const EpochRecord&) { ++callbacks; };

  const TrainResult r = train(st, ds, tiny_net(), tiny_train(), out);
  ASSERT_EQ(r.history.size(), 3u);
  EXPECT_EQ(callbacks, 3);
  EXPECT_EQ(r.history[0].k, 40);
  EXPECT_EQ(r.history[0].steps, 3);  // 10 samples, batch 4
  EXPECT_EQ(r.history[0].sweeps, 40 * 10);
  EXPECT_EQ(r.history[1].sweeps, r.history[0].sweeps + r.history[1].k * 10);
  for (const auto& rec : r.history) {
    EXPECT_TRUE(std::isfinite(rec.train_loss));
    EXPECT_GE(rec.val_loss, 0.0);
  }
  EXPECT_DOUBLE_EQ(r.history.back().val_loss, validate(r.final_params, ds.val));
  EXPECT_DOUBLE_EQ(r.best_val, validate(r.best_params, ds.val));

  const auto lines = csv_lines(read_file(dir / "history.csv"));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "epoch,train_loss,val_loss,k,seconds,sweeps");
  EXPECT_EQ(lines[1].substr(0, 2), "1,");
  EXPECT_EQ(csv_lines(read_file(dir / "timing.csv")).size(), 4u);

  const Checkpoint best = load_checkpoint(dir / "best.gsun", tiny_net());
  const Checkpoint fin = load_checkpoint(dir / "final.gsun", tiny_net());
  EXPECT_TRUE(fin.params == r.final_params);
  EXPECT_TRUE(best.params == r.best_params);
  EXPECT_EQ(best.training.epoch, r.best_epoch);
  EXPECT_EQ(fin.problem, problem_info(ds));
  EXPECT_EQ(fin.training.k_schedule, r.final_schedule);
}

TEST(Trainer, BitwiseDeterministicAcrossThreadCounts) {
  const Dataset ds = tiny_dataset();
  const StencilCoeffs st = assemble_stencil(ds.grid, laplace_coefficients());
  TrainConfig one = tiny_train(), three = tiny_train();
  three.threads = 3;
  const TrainResult a = train(st, ds, tiny_net(), one);
  const TrainResult b = train(st, ds, tiny_net(), one);
  const TrainResult c = train(st, ds, tiny_net(), three);
  EXPECT_TRUE(a.final_params == b.final_params);
  EXPECT_TRUE(a.final_params == c.final_params);
  EXPECT_EQ(history_csv(a.history, false), history_csv(c.history, false));
}

TEST(Trainer, LossesReduceValidationError) {
  const Dataset ds = tiny_dataset(true);
  const StencilCoeffs st = assemble_stencil(ds.grid, laplace_coefficients());
  for (LossKind loss : {LossKind::jacobi, LossKind::data}) {
    TrainConfig t = tiny_train(15);
    t.loss = loss;
    t.optimizer.learning_rate = 1e-2;
    const TrainResult r = train(st, ds, tiny_net(), t);
    EXPECT_LT(r.best_val, 0.5 * r.history.front().val_loss) << to_string(loss);
  }
}

TEST(Trainer, DataLossNeedsTrainingReferences) {
  const Dataset ds = tiny_dataset(false);
  const StencilCoeffs st = assemble_stencil(ds.grid, laplace_coefficients());
  TrainConfig t = tiny_train(1);
  t.loss = LossKind::data;
  EXPECT_THROW(train(st, ds, tiny_net(), t), Error);
}

TEST(Trainer, MismatchedNetworkRejected) {
  const Dataset ds = tiny_dataset();
  const StencilCoeffs st = assemble_stencil(ds.grid, laplace_coefficients());
  UNetConfig wrong = tiny_net();
  wrong.in_channels = 3;
  EXPECT_THROW(train(st, ds, wrong, tiny_train(1)), Error);
}

TEST(Trainer, DivergenceIsReported) {
  const Dataset ds = tiny_dataset();
  const StencilCoeffs st = assemble_stencil(ds.grid, laplace_coefficients());
  TrainConfig t = tiny_train(5);
  t.optimizer.learning_rate = 1e200;
  try {
    train(st, ds, tiny_net(), t);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::divergence);
  }
}

TEST(Trainer, HistoryCsvTimingColumn) {
  TrainHistory h{{1, 0.5, 0.25, 40, 1.5, 400, 3}};
  EXPECT_EQ(csv_lines(history_csv(h, false))[1], "1,0.5,0.25,40,0,400");
  EXPECT_EQ(csv_lines(history_csv(h, true))[1], "1,0.5,0.25,40,1.5,400");
}

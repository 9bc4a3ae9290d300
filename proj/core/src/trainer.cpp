#include "greensurrogate/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numeric>
#include <random>

#include "greensurrogate/error.hpp"
#include "greensurrogate/field_io.hpp"
#include "greensurrogate/parallel.hpp"
#include "greensurrogate/rng.hpp"

namespace gsurr {

AdamOptimizer::AdamOptimizer(const AdamConfig& config, std::size_t size)
    : config_(config), first_(size, 0.0), second_(size, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
  require(params.size() == first_.size() && grad.size() == first_.size(), "AdamOptimizer: size mismatch");
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate;
  for (std::size_t k = 0; k < params.size(); ++k) {
    first_[k] = b1 * first_[k] + (1.0 - b1) * grad[k];
    second_[k] = b2 * second_[k] + (1.0 - b2) * grad[k] * grad[k];
    const double mhat = first_[k] / correction1;
    const double vhat = second_[k] / correction2;
    params[k] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
  }
}

void TrainConfig::validate() const {
  require(epochs >= 1, "epochs must be at least 1");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(optimizer.learning_rate > 0.0 && optimizer.epsilon > 0.0, "invalid optimizer settings");
  require(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0,
          "optimizer moment decays must lie in [0, 1)");
  require(threads >= 1, "threads must be at least 1");
  require(schedule.current_k >= 1, "initial k must be at least 1");
}

ProblemInfo problem_info(const Dataset& dataset) {
  return {dataset.grid.domain(), dataset.coeffs, dataset.coeffs_a, dataset.coeffs_r, dataset.source, dataset.variant};
}

double validate(const UNetParams& params, std::span<const SourceSample> samples, int threads) {
  require(!samples.empty(), "validate: empty validation set");
  UNet net(params.config);
  const std::size_t workers = static_cast<std::size_t>(std::max(1, threads));
  std::vector<UNet::WorkspacePtr> workspaces;
  for (std::size_t w = 0; w < std::min(workers, samples.size()); ++w) workspaces.push_back(net.make_workspace());
  std::vector<double> errors(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t k, std::size_t w) {
    const SourceSample& s = samples[k];
    if (!s.reference) fail(ErrorKind::invalid_argument, "validate: sample without a reference field");
    const Field G = net.forward(params, s.input, *workspaces[w]);
    const double e = l2_error(G, *s.reference);
    errors[k] = e * e;
  });
  double sum = 0.0;
  for (double e : errors) sum += e;
  return sum / static_cast<double>(samples.size());
}

TrainResult train(const StencilCoeffs& stencil, const Dataset& dataset, const UNetConfig& net_config,
                  const TrainConfig& config, const TrainOutputs& outputs) {
  config.validate();
  require_same_grid(stencil.grid(), dataset.grid, "train");
  require(!dataset.train.empty() && !dataset.val.empty(), "train: dataset needs training and validation samples");
  require(net_config.n == dataset.grid.n() && net_config.m == dataset.grid.m(), "train: network grid differs from dataset grid");
  require(net_config.in_channels == channel_count(dataset.variant), "train: network input channels differ from dataset variant");
  for (const SourceSample& s : dataset.val) {
    require(s.reference.has_value(), "train: validation samples must carry reference fields");
  }
  if (config.loss == LossKind::data) {
    for (const SourceSample& s : dataset.train) {
      require(s.reference.has_value(), "train: data loss needs reference fields on training samples");
    }
  }

  const UNet net(net_config);
  UNetParams params = net.init(config.seed);
  AdamOptimizer adam(config.optimizer, net.param_count());

  const std::size_t n_train = dataset.train.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t slots = std::min(batch, n_train);
  const int threads = std::max(1, config.threads);
  std::vector<UNet::WorkspacePtr> workspaces;
  for (std::size_t w = 0; w < std::min<std::size_t>(static_cast<std::size_t>(threads), slots); ++w) {
    workspaces.push_back(net.make_workspace());
  }
  std::vector<std::vector<double>> sample_grads(slots, std::vector<double>(net.param_count()));
  std::vector<double> sample_losses(slots);
  std::vector<long> sample_sweeps(slots);
  std::vector<double> grad(net.param_count());
  const double nodes = static_cast<double>(dataset.grid.size());

  TrainResult result;
  result.best_val = std::numeric_limits<double>::infinity();
  KScheduleState schedule = config.schedule;
  long cumulative_sweeps = 0;
  std::vector<std::size_t> order(n_train);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const int k = schedule.current_k;

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle(substream_seed(config.seed, 0x5348u + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n_train; i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle, i)]);

    double epoch_loss = 0.0;
    long steps = 0;
    for (std::size_t begin = 0; begin < n_train; begin += batch) {
      const std::size_t count = std::min(batch, n_train - begin);
      parallel_for(count, threads, [&](std::size_t b, std::size_t w) {
        const SourceSample& s = dataset.train[order[begin + b]];
        const Field G = net.forward(params, s.input, *workspaces[w]);
        Field dG;
        const SampleLoss sl = sample_loss_and_grad(config.loss, stencil, G, s.rho,
                                                   s.reference ? &*s.reference : nullptr, k, dG);
        sample_losses[b] = sl.value;
        sample_sweeps[b] = sl.jacobi_sweeps;
        net.backward(params, *workspaces[w], dG, sample_grads[b]);
      });
      // Ordered reduction keeps the update independent of the thread count.
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < count; ++b) {
        batch_loss += sample_losses[b];
        cumulative_sweeps += sample_sweeps[b];
        const auto& sg = sample_grads[b];
        for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += sg[p];
      }
      bool finite = std::isfinite(batch_loss);
      for (std::size_t p = 0; finite && p < grad.size(); ++p) finite = std::isfinite(grad[p]);
      if (!finite) {
        fail(ErrorKind::divergence, "training diverged at epoch " + std::to_string(epoch + 1) + ", step " +
                                        std::to_string(steps + 1) + " (non-finite loss or gradient)");
      }
      adam.step(params.values, grad);
      epoch_loss += batch_loss;
      ++steps;
    }

    const double val = validate(params, dataset.val, threads);
    if (!std::isfinite(val)) {
      fail(ErrorKind::divergence, "validation metric became non-finite at epoch " + std::to_string(epoch + 1));
    }
    const auto stop = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = epoch_loss / (static_cast<double>(n_train) * nodes);
    rec.val_loss = val;
    rec.k = k;
    rec.seconds = std::chrono::duration<double>(stop - start).count();
    rec.sweeps = cumulative_sweeps;
    rec.steps = steps;
    result.history.push_back(rec);

    schedule = update_k(schedule, val);

    if (val < result.best_val) {
      result.best_val = val;
      result.best_epoch = epoch + 1;
      result.best_params = params;
      if (outputs.directory) {
        save_checkpoint(*outputs.directory / "best.gsun",
                        Checkpoint{kCheckpointVersion, params, outputs.problem, {epoch + 1, schedule, config.seed, val}});
      }
    }
    if (outputs.directory) {
      atomic_write(*outputs.directory / "history.csv", history_csv(result.history, !config.deterministic));
      if (config.deterministic) atomic_write(*outputs.directory / "timing.csv", timing_csv(result.history));
    }
    if (outputs.on_epoch) outputs.on_epoch(rec);
  }

  result.final_params = params;
  result.final_schedule = schedule;
  if (outputs.directory) {
    save_checkpoint(*outputs.directory / "final.gsun",
                    Checkpoint{kCheckpointVersion, params, outputs.problem,
                               {config.epochs, schedule, config.seed, result.history.back().val_loss}});
  }
  return result;
}

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string history_csv(const TrainHistory& history, bool include_timing) {
  std::string out = "epoch,train_loss,val_loss,k,seconds,sweeps\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch) + "," + format_real(r.train_loss) + "," + format_real(r.val_loss) + "," +
           std::to_string(r.k) + "," + (include_timing ? format_real(r.seconds) : std::string("0")) + "," +
           std::to_string(r.sweeps) + "\n";
  }
  return out;
}

std::string timing_csv(const TrainHistory& history) {
  std::string out = "epoch,seconds\n";
  for (const EpochRecord& r : history) out += std::to_string(r.epoch) + "," + format_real(r.seconds) + "\n";
  return out;
}

}  // namespace gsurr

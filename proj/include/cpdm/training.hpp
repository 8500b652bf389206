#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cpdm/errors.hpp"
#include "cpdm/noise_predictor.hpp"

namespace cpdm {

struct TrainingConfig {
  int epochs = 50;
  int batch_size = 2;
  double learning_rate = 1e-4;
  /// The step size is multiplied by lr_decay every lr_decay_period epochs.
  double lr_decay = 0.5;
  int lr_decay_period = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Adam with the usual (0.9, 0.999, 1e-8) constants.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::size_t size, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8);

  void step(PredictorParams& params, const PredictorParams& grads, double learning_rate);

 private:
  double beta1_;
  double beta2_;
  double eps_;
  long step_count_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

struct TrainingResult {
  PredictorParams params;
  std::vector<double> epoch_losses;
};

/// Raised when the loss stops being finite; carries the loss trace so far.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Called after every epoch with the epoch index (0-based) and its mean loss.
using EpochCallback = std::function<void(int, double, const PredictorParams&)>;

/// Trains on clean working-domain grids by denoising score matching.
TrainingResult train(PredictorParams initial, std::span<const Grid> dataset,
                     const NoiseSchedule& sched, const TrainingConfig& cfg,
                     const EpochCallback& on_epoch = {});

/// Same, starting from init_params(arch, cfg.seed).
TrainingResult train(std::span<const Grid> dataset, const NoiseSchedule& sched,
                     const TrainingConfig& cfg, const ArchitectureConfig& arch = {},
                     const EpochCallback& on_epoch = {});

}  // namespace cpdm

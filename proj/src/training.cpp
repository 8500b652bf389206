#include "cpdm/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cpdm/rng.hpp"

namespace cpdm {

void TrainingConfig::validate() const {
  if (epochs < 0) throw DomainError("epochs must be >= 0");
  if (batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw DomainError("learning_rate must be positive");
  if (!(lr_decay > 0.0)) throw DomainError("lr_decay must be positive");
  if (lr_decay_period < 1) throw DomainError("lr_decay_period must be >= 1");
}

AdamOptimizer::AdamOptimizer(std::size_t size, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

void AdamOptimizer::step(PredictorParams& params, const PredictorParams& grads,
                         double learning_rate) {
  auto p = params.values();
  auto g = grads.values();
  if (p.size() != m_.size() || g.size() != m_.size()) {
    throw ShapeError("optimizer state does not match parameter count");
  }
  ++step_count_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g[i] * g[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

TrainingResult train(PredictorParams initial, std::span<const Grid> dataset,
                     const NoiseSchedule& sched, const TrainingConfig& cfg,
                     const EpochCallback& on_epoch) {
  cfg.validate();
  if (dataset.empty()) throw DomainError("train: dataset is empty");

  TrainingResult result{std::move(initial), {}};
  AdamOptimizer adam(result.params.size());
  Rng shuffle_rng(cfg.seed, 0x5eed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Grid> batch;
  std::uint64_t batch_counter = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr =
        cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(epoch / cfg.lr_decay_period));
    // Fisher-Yates with the counter generator keeps shuffles reproducible.
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);
      Rng draw_rng(cfg.seed, 0x100000 + batch_counter++);
      const auto lg = loss_and_gradients(result.params, batch, sched, draw_rng);
      if (!std::isfinite(lg.loss) || !lg.grads.all_finite()) {
        result.epoch_losses.push_back(lg.loss);
        throw TrainingDiverged("training diverged in epoch " + std::to_string(epoch),
                               result.epoch_losses);
      }
      adam.step(result.params, lg.grads, lr);
      loss_sum += lg.loss;
      ++batches;
    }
    const double epoch_loss = loss_sum / static_cast<double>(batches);
    result.epoch_losses.push_back(epoch_loss);
    if (!result.params.all_finite()) {
      throw TrainingDiverged("parameters became non-finite in epoch " + std::to_string(epoch),
                             result.epoch_losses);
    }
    if (on_epoch) on_epoch(epoch, epoch_loss, result.params);
  }
  return result;
}

TrainingResult train(std::span<const Grid> dataset, const NoiseSchedule& sched,
                     const TrainingConfig& cfg, const ArchitectureConfig& arch,
                     const EpochCallback& on_epoch) {
  return train(init_params(arch, cfg.seed), dataset, sched, cfg, on_epoch);
}

}  // namespace cpdm

#pragma once

#include <vector>

#include "cpdm/grid.hpp"

namespace cpdm {

/// Coefficients of one reverse transition x_t -> x_s (s < t).
struct StepCoefficients {
  double alpha = 1.0;      // alpha_bar_t / alpha_bar_s
  double beta = 0.0;       // 1 - alpha
  double alpha_bar = 1.0;  // alpha_bar_t
  double sigma = 0.0;      // injected noise scale, sigma^2 = beta
  bool final_step = false; // s == 0: no noise is injected
};

/// Variance schedule of the forward chain. Steps are 1-based; alpha_bar(0) = 1.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  explicit NoiseSchedule(std::vector<double> betas);

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_.at(checked(t) - 1); }
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const;
  double sigma(int t) const { return sigma_.at(checked(t) - 1); }
  /// sqrt(1 - alpha_bar_t): standard deviation of the noise in x_t.
  double noise_level(int t) const;

  /// Single-step coefficients for t -> t-1.
  StepCoefficients step(int t) const { return transition(t, t - 1); }
  /// Coefficients for a strided jump t -> s with 0 <= s < t.
  StepCoefficients transition(int t, int s) const;

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

 private:
  int checked(int t) const;

  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
  std::vector<double> sigma_;
};

struct DiffusionState {
  Grid x;
  int t = 0;
};

/// beta_t = beta_start + (t-1)/(T-1) * (beta_end - beta_start), t = 1..T.
NoiseSchedule linear_beta_schedule(int steps, double beta_start, double beta_end);

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
Grid forward_sample(const Grid& x0, int t, const Grid& eps, const NoiseSchedule& sched);

/// Ancestral reverse step t -> t-1. At t = 1 the noise grid is ignored.
Grid reverse_step(const Grid& x_t, int t, const Grid& eps_pred, const NoiseSchedule& sched,
                  const Grid& noise);

/// Reverse step with explicit (possibly strided) coefficients.
Grid reverse_step(const Grid& x_t, const StepCoefficients& coeffs, const Grid& eps_pred,
                  const Grid& noise);

/// Smallest t with noise_level(t) >= sigma_est, clamped to [1, T].
int truncation_step(double sigma_est, const NoiseSchedule& sched);

/// Ascending timesteps for a reverse chain that starts at t_start and takes
/// at most max_steps jumps; the last entry is t_start, the chain ends at 0.
std::vector<int> strided_timesteps(int t_start, int max_steps);

}  // namespace cpdm

namespace cpdm {

/// Serializable description of a linear schedule.
struct ScheduleConfig {
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 6e-3;

  NoiseSchedule build() const { return linear_beta_schedule(steps, beta_start, beta_end); }
  friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

}  // namespace cpdm

#include "cpdm/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cpdm {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : beta_(std::move(betas)) {
  if (beta_.empty()) throw DomainError("schedule needs at least one step");
  alpha_bar_.resize(beta_.size());
  sigma_.resize(beta_.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    const double b = beta_[i];
    if (!(b > 0.0 && b < 1.0)) throw DomainError("beta values must lie in (0, 1)");
    if (i > 0 && b < beta_[i - 1]) throw DomainError("beta values must be non-decreasing");
    prod *= 1.0 - b;
    alpha_bar_[i] = prod;
    sigma_[i] = std::sqrt(b);
  }
}

int NoiseSchedule::checked(int t) const {
  if (t < 1 || t > steps()) {
    throw DomainError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(steps()) +
                      "]");
  }
  return t;
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  return alpha_bar_.at(checked(t) - 1);
}

double NoiseSchedule::noise_level(int t) const { return std::sqrt(1.0 - alpha_bar(t)); }

StepCoefficients NoiseSchedule::transition(int t, int s) const {
  checked(t);
  if (s < 0 || s >= t) throw DomainError("transition target must satisfy 0 <= s < t");
  StepCoefficients c;
  c.alpha_bar = alpha_bar(t);
  if (s == t - 1) {
    c.beta = beta(t);
    c.alpha = 1.0 - c.beta;
  } else {
    c.alpha = c.alpha_bar / alpha_bar(s);
    c.beta = 1.0 - c.alpha;
  }
  c.sigma = std::sqrt(c.beta);
  c.final_step = (s == 0);
  return c;
}

NoiseSchedule linear_beta_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw DomainError("schedule step count must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw DomainError("schedule requires 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) {
    betas[t - 1] = steps == 1 ? beta_start
                              : beta_start + static_cast<double>(t - 1) / (steps - 1) *
                                                 (beta_end - beta_start);
  }
  // Pin the endpoint: the interpolation above can land one ulp off.
  betas.back() = steps == 1 ? beta_start : beta_end;
  return NoiseSchedule(std::move(betas));
}

Grid forward_sample(const Grid& x0, int t, const Grid& eps, const NoiseSchedule& sched) {
  require_same_shape(x0, eps, "forward_sample");
  if (t < 1) throw DomainError("forward_sample: t must be >= 1");
  const double ab = sched.alpha_bar(t);
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  Grid out(x0.width(), x0.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
  return out;
}

Grid reverse_step(const Grid& x_t, const StepCoefficients& c, const Grid& eps_pred,
                  const Grid& noise) {
  require_same_shape(x_t, eps_pred, "reverse_step");
  if (!c.final_step) require_same_shape(x_t, noise, "reverse_step");
  const double inv_sqrt_alpha = 1.0 / std::sqrt(c.alpha);
  const double eps_coef = c.beta / std::sqrt(1.0 - c.alpha_bar);
  Grid out(x_t.width(), x_t.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = inv_sqrt_alpha * (x_t[i] - eps_coef * eps_pred[i]);
    if (!c.final_step) out[i] += c.sigma * noise[i];
  }
  return out;
}

Grid reverse_step(const Grid& x_t, int t, const Grid& eps_pred, const NoiseSchedule& sched,
                  const Grid& noise) {
  return reverse_step(x_t, sched.step(t), eps_pred, noise);
}

int truncation_step(double sigma_est, const NoiseSchedule& sched) {
  if (!(sigma_est >= 0.0)) throw DomainError("truncation_step: sigma_est must be >= 0");
  // noise_level is strictly increasing in t.
  const auto& ab = sched.alpha_bars();
  auto it = std::lower_bound(ab.begin(), ab.end(), sigma_est, [](double alpha_bar, double s) {
    return std::sqrt(1.0 - alpha_bar) < s;
  });
  if (it == ab.end()) return sched.steps();
  return std::max(1, static_cast<int>(it - ab.begin()) + 1);
}

std::vector<int> strided_timesteps(int t_start, int max_steps) {
  if (t_start < 1 || max_steps < 1) throw DomainError("strided_timesteps: arguments must be >= 1");
  const int n = std::min(t_start, max_steps);
  std::vector<int> ts(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    ts[k - 1] = static_cast<int>(std::lround(static_cast<double>(k) * t_start / n));
  }
  return ts;
}

}  // namespace cpdm

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpdm/diffusion.hpp"
#include "cpdm/errors.hpp"
#include "cpdm/grid.hpp"
#include "cpdm/noise_predictor.hpp"
#include "cpdm/speckle_model.hpp"

namespace cpdm {

struct SolverConfig {
  /// Weight of the coupling (lambda/2)||z - u||^2 to the diffusion iterate.
  double lambda = 0.2;
  int max_reverse_steps = 4;
  double newton_tol = 1e-6;
  int newton_max_iter = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct NewtonResult {
  Grid z;
  int max_iterations = 0;    // worst pixel
  long total_iterations = 0;
  long capped_pixels = 0;    // pixels that hit newton_max_iter
};

/// Per-pixel minimiser of z + exp(g - z) + (lambda/2)(z - u)^2 by safeguarded
/// Newton iteration, warm started at z_init. Iteration stops once
/// |z_{k+1} - z_k| <= tol.
NewtonResult newton_z_update(const Grid& z_init, const Grid& g, const Grid& u, double lambda,
                             double tol, int max_iter);

/// sum_s (z_s + exp(g_s - z_s)) + (lambda/2) ||z - u||^2.
double objective_value(const Grid& z, const Grid& g, const Grid& u, double lambda);

/// Scalar stationarity residual 1 - exp(g - z) + lambda (z - u).
double newton_residual(double z, double g, double u, double lambda);

struct DespeckleTrace {
  double sigma_est = 0.0;        // log-domain noise std
  double model_sigma = 0.0;      // same, in the predictor's working range
  int truncation_step = 0;       // first t whose noise level reaches model_sigma
  int start_step = 0;            // first timestep of the executed chain
  std::vector<int> timesteps;    // executed, descending
  std::vector<double> objective; // fidelity objective after each step
  std::vector<int> newton_iterations;  // worst pixel per step
  std::string variant;
};

/// Error raised mid-despeckle; the partial trace is attached.
class DespeckleError : public Error {
 public:
  DespeckleError(const std::string& what, DespeckleTrace trace)
      : Error(what), trace_(std::move(trace)) {}
  const DespeckleTrace& trace() const { return trace_; }

 private:
  DespeckleTrace trace_;
};

struct DespeckleResult {
  Image image;
  DespeckleTrace trace;
};

/// Truncated reverse diffusion in the log domain, alternating a prior step
/// with the gamma-likelihood fidelity step. `noisy` must be finite and
/// non-negative.
DespeckleResult despeckle(const Image& noisy, const NoisePredictor& predictor,
                          const NoiseSchedule& sched, const LogAffine& normalization,
                          const SpeckleParams& speckle, const SolverConfig& cfg,
                          const NoiseEstimator& estimator = HaarMadEstimator{});

/// Same chain without the fidelity step (z = u after each reverse step).
DespeckleResult despeckle_prior_only(const Image& noisy, const NoisePredictor& predictor,
                                     const NoiseSchedule& sched, const LogAffine& normalization,
                                     const SpeckleParams& speckle, const SolverConfig& cfg,
                                     const NoiseEstimator& estimator = HaarMadEstimator{});

}  // namespace cpdm

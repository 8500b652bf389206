#include "cpdm/solver.hpp"

#include <algorithm>
#include <cmath>

#include "cpdm/rng.hpp"

namespace cpdm {

void SolverConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be >= 0");
  if (max_reverse_steps < 1) throw DomainError("max_reverse_steps must be >= 1");
  if (!(newton_tol > 0.0)) throw DomainError("newton_tol must be positive");
  if (newton_max_iter < 1) throw DomainError("newton_max_iter must be >= 1");
}

double newton_residual(double z, double g, double u, double lambda) {
  return 1.0 - std::exp(g - z) + lambda * (z - u);
}

namespace {

struct ScalarNewton {
  double z;
  int iterations;
  bool capped;
};

// The residual is increasing and concave in z, and its root lies between g
// and u. Iterates left of the root converge monotonically, so a step that
// overshoots the bracket restarts from the bracket's left end.
ScalarNewton solve_pixel(double z, double g, double u, double lambda, double tol, int max_iter) {
  if (lambda == 0.0) return {g, 0, false};
  const double lo = std::min(g, u);
  const double hi = std::max(g, u);
  z = std::clamp(z, lo, hi);
  for (int k = 1; k <= max_iter; ++k) {
    const double e = std::exp(g - z);
    double next = z - (1.0 - e + lambda * (z - u)) / (e + lambda);
    if (next < lo) next = lo;
    if (next > hi) next = hi;
    const double step = std::abs(next - z);
    z = next;
    if (step <= tol) return {z, k, false};
  }
  return {z, max_iter, true};
}

}  // namespace

NewtonResult newton_z_update(const Grid& z_init, const Grid& g, const Grid& u, double lambda,
                             double tol, int max_iter) {
  require_same_shape(z_init, g, "newton_z_update");
  require_same_shape(z_init, u, "newton_z_update");
  if (!(lambda >= 0.0)) throw DomainError("newton_z_update: lambda must be >= 0");
  if (!(tol > 0.0) || max_iter < 1) throw DomainError("newton_z_update: invalid stopping rule");

  NewtonResult out;
  out.z = Grid(z_init.width(), z_init.height());
  for (std::size_t i = 0; i < z_init.size(); ++i) {
    if (!std::isfinite(z_init[i]) || !std::isfinite(g[i]) || !std::isfinite(u[i])) {
      throw DomainError("newton_z_update: non-finite input at pixel " + std::to_string(i));
    }
    const ScalarNewton r = solve_pixel(z_init[i], g[i], u[i], lambda, tol, max_iter);
    if (!std::isfinite(r.z)) {
      throw DomainError("newton_z_update: non-finite iterate at pixel " + std::to_string(i));
    }
    out.z[i] = r.z;
    out.max_iterations = std::max(out.max_iterations, r.iterations);
    out.total_iterations += r.iterations;
    if (r.capped) ++out.capped_pixels;
  }
  return out;
}

double objective_value(const Grid& z, const Grid& g, const Grid& u, double lambda) {
  require_same_shape(z, g, "objective_value");
  require_same_shape(z, u, "objective_value");
  double fidelity = 0.0;
  double coupling = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    fidelity += z[i] + std::exp(g[i] - z[i]);
    const double d = z[i] - u[i];
    coupling += d * d;
  }
  return fidelity + 0.5 * lambda * coupling;
}

namespace {

void check_noisy(const Image& noisy) {
  if (noisy.empty()) throw ShapeError("despeckle: empty image");
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    if (!std::isfinite(noisy[i]) || noisy[i] < 0.0) {
      throw DomainError("despeckle: input must be finite and non-negative (pixel " +
                        std::to_string(i) + ")");
    }
  }
}

DespeckleResult run_chain(const Image& noisy, const NoisePredictor& predictor,
                          const NoiseSchedule& sched, const LogAffine& norm,
                          const SpeckleParams& speckle, const SolverConfig& cfg,
                          const NoiseEstimator& estimator, bool with_fidelity) {
  cfg.validate();
  speckle.validate();
  check_noisy(noisy);

  DespeckleTrace trace;
  trace.variant = with_fidelity ? "cpdm" : "logdm";
  try {
    const LogImage observed = log_transform(noisy, speckle.log_floor);
    const Grid g = grid_cast<RawTag>(observed);
    trace.sigma_est = estimator.estimate(observed);
    trace.model_sigma = trace.sigma_est * std::abs(norm.scale);
    trace.truncation_step = truncation_step(trace.model_sigma, sched);
    const auto steps = strided_timesteps(trace.truncation_step, cfg.max_reverse_steps);
    trace.start_step = steps.back();

    Grid z = g;
    Grid x(z.width(), z.height());
    Grid noise(z.width(), z.height());
    for (std::size_t k = steps.size(); k-- > 0;) {
      const int t = steps[k];
      const int s = k == 0 ? 0 : steps[k - 1];
      for (std::size_t i = 0; i < z.size(); ++i) x[i] = norm.to_model(z[i]);
      const Grid eps = predictor.predict(x, t);
      const StepCoefficients coeffs = sched.transition(t, s);
      if (!coeffs.final_step) {
        Rng rng(cfg.seed, static_cast<std::uint64_t>(t));
        for (double& v : noise) v = rng.normal();
      }
      Grid u = reverse_step(x, coeffs, eps, noise);
      for (double& v : u) v = norm.from_model(v);

      trace.timesteps.push_back(t);
      if (with_fidelity) {
        NewtonResult nr =
            newton_z_update(z, g, u, cfg.lambda, cfg.newton_tol, cfg.newton_max_iter);
        z = std::move(nr.z);
        trace.newton_iterations.push_back(nr.max_iterations);
      } else {
        const auto bad = first_non_finite(u.values());
        if (bad >= 0) {
          throw DomainError("despeckle: non-finite prior iterate at pixel " + std::to_string(bad));
        }
        z = std::move(u);
        trace.newton_iterations.push_back(0);
      }
      trace.objective.push_back(objective_value(z, g, z, 0.0));
    }
    return {exp_transform(grid_cast<LogTag>(std::move(z))), std::move(trace)};
  } catch (const DespeckleError&) {
    throw;
  } catch (const Error& e) {
    throw DespeckleError(e.what(), std::move(trace));
  }
}

}  // namespace

DespeckleResult despeckle(const Image& noisy, const NoisePredictor& predictor,
                          const NoiseSchedule& sched, const LogAffine& normalization,
                          const SpeckleParams& speckle, const SolverConfig& cfg,
                          const NoiseEstimator& estimator) {
  return run_chain(noisy, predictor, sched, normalization, speckle, cfg, estimator, true);
}

DespeckleResult despeckle_prior_only(const Image& noisy, const NoisePredictor& predictor,
                                     const NoiseSchedule& sched, const LogAffine& normalization,
                                     const SpeckleParams& speckle, const SolverConfig& cfg,
                                     const NoiseEstimator& estimator) {
  return run_chain(noisy, predictor, sched, normalization, speckle, cfg, estimator, false);
}

}  // namespace cpdm

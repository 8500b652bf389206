#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cpdm/phantom.hpp"
#include "cpdm/rng.hpp"
#include "cpdm/solver.hpp"

using namespace cpdm;

namespace {

// Root of the stationarity residual by plain bisection; the residual is
// increasing in z.
double bisect_root(double g, double u, double lambda, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (newton_residual(mid, g, u, lambda) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double scalar_objective(double z, double g, double u, double lambda) {
  return z + std::exp(g - z) + 0.5 * lambda * (z - u) * (z - u);
}

Grid scalar(double v) { return Grid(1, 1, v); }

const NoiseSchedule& schedule() {
  static const NoiseSchedule s = linear_beta_schedule(1000, 1e-4, 6e-3);
  return s;
}

class NanPredictor final : public NoisePredictor {
 public:
  Grid predict(const Grid& x_t, int) const override {
    return Grid(x_t.width(), x_t.height(), std::numeric_limits<double>::quiet_NaN());
  }
};

const ConvPredictor& zero_predictor() {
  static const ConvPredictor p(init_params(ArchitectureConfig{}, 0));
  return p;
}

// A prior that pulls everything toward a constant log level.
GaussianOraclePredictor flat_prior() { return {{-1.5, 0.1}, schedule()}; }

double correlation(const Image& a, const Image& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Newton, FixedPointAtOrigin) {
  for (double lambda : {0.0, 0.2, 5.0}) {
    EXPECT_EQ(newton_z_update(scalar(0.0), scalar(0.0), scalar(0.0), lambda, 1e-6, 50).z[0], 0.0);
  }
}

TEST(Newton, LambdaZeroReturnsObservation) {
  const auto r = newton_z_update(scalar(3.0), scalar(-1.25), scalar(4.0), 0.0, 1e-6, 50);
  EXPECT_EQ(r.z[0], -1.25);
}

TEST(Newton, MatchesBisectionExample) {
  const double ref = bisect_root(1.0, 0.0, 0.2, -10.0, 10.0);
  const auto r = newton_z_update(scalar(1.0), scalar(1.0), scalar(0.0), 0.2, 1e-12, 50);
  EXPECT_NEAR(r.z[0], ref, 1e-9);
}

TEST(Newton, RandomScalarInstances) {
  Rng rng(2024);
  const double lambdas[] = {0.0, 0.2, 1.0, 10.0};
  for (int k = 0; k < 10000; ++k) {
    const double g = -5.0 + 10.0 * rng.uniform();
    const double u = -5.0 + 10.0 * rng.uniform();
    const double z0 = -5.0 + 10.0 * rng.uniform();
    const double lambda = lambdas[k % 4];
    const auto r = newton_z_update(scalar(z0), scalar(g), scalar(u), lambda, 1e-6, 50);
    const double z = r.z[0];
    EXPECT_EQ(r.capped_pixels, 0);
    EXPECT_LE(std::abs(newton_residual(z, g, u, lambda)), 1e-6);
    if (lambda == 0.0) {
      EXPECT_NEAR(z, g, 1e-9);
    } else {
      EXPECT_NEAR(z, bisect_root(g, u, lambda, -20.0, 20.0), 1e-6);
    }
    EXPECT_LE(scalar_objective(z, g, u, lambda), scalar_objective(z0, g, u, lambda) + 1e-12);
  }
}

TEST(Newton, DescentOnGrids) {
  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    Grid z0(6, 5), g(6, 5), u(6, 5);
    for (std::size_t i = 0; i < z0.size(); ++i) {
      z0[i] = 3.0 * rng.normal();
      g[i] = 3.0 * rng.normal();
      u[i] = 3.0 * rng.normal();
    }
    const double lambda = 5.0 * rng.uniform();
    const auto r = newton_z_update(z0, g, u, lambda, 1e-6, 50);
    EXPECT_LE(objective_value(r.z, g, u, lambda), objective_value(z0, g, u, lambda));
  }
}

TEST(Newton, SolutionLiesBetweenObservationAndPrior) {
  Rng rng(8);
  for (int k = 0; k < 1000; ++k) {
    const double g = 4.0 * rng.normal(), u = 4.0 * rng.normal();
    const double z = newton_z_update(scalar(u), scalar(g), scalar(u), 0.7, 1e-8, 50).z[0];
    EXPECT_GE(z, std::min(g, u) - 1e-12);
    EXPECT_LE(z, std::max(g, u) + 1e-12);
  }
}

TEST(Newton, FidelityInfluenceIsMonotoneInLambda) {
  // Larger lambda moves z* away from the observation g and toward u.
  Rng rng(9);
  for (int k = 0; k < 500; ++k) {
    const double g = -5.0 + 10.0 * rng.uniform();
    const double u = -5.0 + 10.0 * rng.uniform();
    double prev_g = -1.0, prev_u = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.2, 1.0, 10.0, 1e6}) {
      const double z = newton_z_update(scalar(g), scalar(g), scalar(u), lambda, 1e-10, 100).z[0];
      EXPECT_GE(std::abs(z - g), prev_g - 1e-9);
      EXPECT_LE(std::abs(z - u), prev_u + 1e-9);
      prev_g = std::abs(z - g);
      prev_u = std::abs(z - u);
    }
    EXPECT_LE(prev_u, (1.0 + std::exp(g - u)) / 1e6);
  }
}

TEST(Newton, IterationCapIsReported) {
  const auto r = newton_z_update(scalar(-50.0), scalar(8.0), scalar(-8.0), 1e-3, 1e-15, 2);
  EXPECT_EQ(r.capped_pixels, 1);
  EXPECT_EQ(r.max_iterations, 2);
}

TEST(Newton, Errors) {
  EXPECT_THROW(newton_z_update(Grid(2, 2), Grid(2, 3), Grid(2, 2), 0.2, 1e-6, 50), ShapeError);
  EXPECT_THROW(newton_z_update(scalar(0), scalar(0), scalar(0), -1.0, 1e-6, 50), DomainError);
  try {
    Grid g(3, 1);
    g[2] = std::numeric_limits<double>::infinity();
    newton_z_update(Grid(3, 1), g, Grid(3, 1), 0.2, 1e-6, 50);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("pixel 2"), std::string::npos);
  }
}

TEST(Objective, Examples) {
  EXPECT_DOUBLE_EQ(objective_value(scalar(0), scalar(0), scalar(0), 0.2), 1.0);
  const Grid g(3, 2, std::vector<double>{0.1, -2.0, 0.3, 1.0, 0.0, -0.5});
  double expected = 0.0;
  for (double v : g) expected += v + 1.0;
  EXPECT_NEAR(objective_value(g, g, g, 0.7), expected, 1e-12);
  EXPECT_DOUBLE_EQ(objective_value(scalar(1.0), scalar(1.0), scalar(0.0), 0.4), 1.0 + 1.0 + 0.2);
}

TEST(SolverConfig, Validation) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lambda = -0.1;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.newton_tol = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.max_reverse_steps = 0;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(Despeckle, CleanInputIsNearIdentity) {
  const Image clean = generate_phantom(default_phantom_spec(64, 64, 1));
  const auto r = despeckle(clean, zero_predictor(), schedule(), LogAffine{}, SpeckleParams{},
                           SolverConfig{});
  EXPECT_EQ(r.trace.start_step, 1);
  EXPECT_EQ(r.trace.timesteps, std::vector<int>{1});
  for (std::size_t i = 0; i < clean.size(); ++i) EXPECT_LT(std::abs(r.image[i] - clean[i]), 0.05);
  EXPECT_GE(correlation(r.image, clean), 0.99);
}

TEST(Despeckle, TraceForSpeckledInput) {
  const Image clean = generate_phantom(default_phantom_spec(64, 64, 2));
  const Image noisy = apply_speckle(clean, 4.0, 3);
  const auto prior = flat_prior();
  const auto r = despeckle(noisy, prior, schedule(), LogAffine{}, SpeckleParams{}, SolverConfig{});
  EXPECT_GT(r.trace.sigma_est, 0.3);
  EXPECT_GT(r.trace.truncation_step, 4);
  EXPECT_EQ(r.trace.timesteps.size(), 4u);
  EXPECT_EQ(r.trace.timesteps.front(), r.trace.start_step);
  EXPECT_LT(r.trace.timesteps.back(), r.trace.timesteps.front());
  EXPECT_EQ(r.trace.objective.size(), 4u);
  EXPECT_EQ(r.trace.newton_iterations.size(), 4u);
  for (double o : r.trace.objective) EXPECT_TRUE(std::isfinite(o));
  EXPECT_EQ(r.trace.variant, "cpdm");
}

TEST(Despeckle, LargeLambdaFollowsPriorSmallLambdaFollowsData) {
  const Image clean = generate_phantom(default_phantom_spec(48, 48, 4));
  const Image noisy = apply_speckle(clean, 4.0, 5);
  const auto prior = flat_prior();
  SolverConfig cfg;
  const auto prior_only =
      despeckle_prior_only(noisy, prior, schedule(), LogAffine{}, SpeckleParams{}, cfg);
  cfg.lambda = 1e6;
  const auto strong = despeckle(noisy, prior, schedule(), LogAffine{}, SpeckleParams{}, cfg);
  cfg.lambda = 1e-9;
  const auto weak = despeckle(noisy, prior, schedule(), LogAffine{}, SpeckleParams{}, cfg);
  double max_strong = 0.0, max_weak = 0.0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    max_strong = std::max(max_strong, std::abs(strong.image[i] - prior_only.image[i]));
    max_weak = std::max(max_weak, std::abs(weak.image[i] - std::min(1.0, std::max(noisy[i], 1e-3))));
  }
  EXPECT_LT(max_strong, 0.01);
  EXPECT_LT(max_weak, 0.01);
}

TEST(Despeckle, PriorOnlyIgnoresLambda) {
  const Image noisy = apply_speckle(generate_phantom(default_phantom_spec(32, 32, 6)), 4.0, 7);
  const auto prior = flat_prior();
  SolverConfig a, b;
  b.lambda = 37.0;
  const auto ra = despeckle_prior_only(noisy, prior, schedule(), LogAffine{}, SpeckleParams{}, a);
  const auto rb = despeckle_prior_only(noisy, prior, schedule(), LogAffine{}, SpeckleParams{}, b);
  EXPECT_EQ(ra.image, rb.image);
  EXPECT_EQ(ra.trace.variant, "logdm");
  const auto full = despeckle(noisy, prior, schedule(), LogAffine{}, SpeckleParams{}, a);
  EXPECT_EQ(full.trace.timesteps, ra.trace.timesteps);
  EXPECT_NE(full.image, ra.image);
}

TEST(Despeckle, Deterministic) {
  const Image noisy = apply_speckle(generate_phantom(default_phantom_spec(32, 32, 8)), 4.0, 9);
  const auto prior = flat_prior();
  SolverConfig cfg;
  cfg.seed = 17;
  const auto a = despeckle(noisy, prior, schedule(), LogAffine{}, SpeckleParams{}, cfg);
  const auto b = despeckle(noisy, prior, schedule(), LogAffine{}, SpeckleParams{}, cfg);
  EXPECT_EQ(a.image, b.image);
  cfg.seed = 18;
  const auto c = despeckle(noisy, prior, schedule(), LogAffine{}, SpeckleParams{}, cfg);
  EXPECT_NE(a.image, c.image);
}

TEST(Despeckle, ErrorsCarryTrace) {
  Image bad(32, 32, 0.5);
  bad[5] = -0.1;
  EXPECT_THROW(despeckle(bad, zero_predictor(), schedule(), LogAffine{}, SpeckleParams{},
                         SolverConfig{}),
               DomainError);
  const Image noisy = apply_speckle(Image(32, 32, 0.5), 4.0, 1);
  try {
    despeckle(noisy, NanPredictor{}, schedule(), LogAffine{}, SpeckleParams{}, SolverConfig{});
    FAIL();
  } catch (const DespeckleError& e) {
    EXPECT_GT(e.trace().sigma_est, 0.0);
    EXPECT_GT(e.trace().start_step, 0);
  }
  EXPECT_THROW(despeckle(Image(8, 8, 0.5), zero_predictor(), schedule(), LogAffine{},
                         SpeckleParams{}, SolverConfig{}),
               DespeckleError);
}

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpdm/diffusion.hpp"
#include "cpdm/grid.hpp"

namespace cpdm {

class Rng;

/// Shape of the convolutional noise predictor. Every layer but the last is
/// followed by a time-conditioned scale/shift and a SiLU.
struct ArchitectureConfig {
  std::vector<int> channels{1, 16, 16, 16, 1};
  int kernel = 3;
  int time_embedding_dim = 32;

  int layers() const { return static_cast<int>(channels.size()) - 1; }
  void validate() const;
  friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t count = 0;
  friend bool operator==(const TensorInfo&, const TensorInfo&) = default;
};

/// Flat parameter vector with a named tensor layout derived from the
/// architecture. Gradients use the same type.
class PredictorParams {
 public:
  PredictorParams() = default;
  /// All-zero parameters for `arch`.
  explicit PredictorParams(ArchitectureConfig arch);

  const ArchitectureConfig& arch() const { return arch_; }
  const std::vector<TensorInfo>& tensors() const { return layout_; }
  const TensorInfo& tensor_info(const std::string& name) const;

  std::span<double> tensor(const std::string& name);
  std::span<const double> tensor(const std::string& name) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool all_finite() const;

  friend bool operator==(const PredictorParams&, const PredictorParams&) = default;

 private:
  ArchitectureConfig arch_;
  std::vector<TensorInfo> layout_;
  std::vector<double> values_;
};

/// Fan-in scaled uniform weights, zero biases, zero output layer: the fresh
/// predictor outputs exactly 0.
PredictorParams init_params(const ArchitectureConfig& arch, std::uint64_t seed);

/// Sinusoidal encoding of the timestep, `dim` entries (sin half, cos half).
std::vector<double> time_embedding(int t, int dim);

/// Network forward pass. Fully convolutional with reflect padding; any grid
/// of at least 8x8 is accepted.
Grid predict(const PredictorParams& params, const Grid& x_t, int t);

/// Data distribution x0 ~ N(mu0, sigma0^2 I) for which the optimal
/// noise predictor is known in closed form.
struct GaussianOracleSpec {
  double mu0 = 0.0;
  double sigma0 = 1.0;
};

/// E[eps | x_t] under GaussianOracleSpec.
Grid oracle_predict(const GaussianOracleSpec& spec, const Grid& x_t, int t,
                    const NoiseSchedule& sched);

/// Anything that can stand in for eps_theta(x_t, t).
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual Grid predict(const Grid& x_t, int t) const = 0;
};

class ConvPredictor final : public NoisePredictor {
 public:
  explicit ConvPredictor(PredictorParams params) : params_(std::move(params)) {}
  Grid predict(const Grid& x_t, int t) const override { return cpdm::predict(params_, x_t, t); }
  const PredictorParams& params() const { return params_; }

 private:
  PredictorParams params_;
};

class GaussianOraclePredictor final : public NoisePredictor {
 public:
  GaussianOraclePredictor(GaussianOracleSpec spec, NoiseSchedule sched)
      : spec_(spec), sched_(std::move(sched)) {}
  Grid predict(const Grid& x_t, int t) const override {
    return oracle_predict(spec_, x_t, t, sched_);
  }

 private:
  GaussianOracleSpec spec_;
  NoiseSchedule sched_;
};

/// A frozen (t, eps) pair for one training sample.
struct NoiseDraw {
  int t = 1;
  Grid eps;
};

struct LossAndGradients {
  double loss = 0.0;
  PredictorParams grads;
};

/// Draws t ~ U{1..T} and eps ~ N(0, I) for each sample of the batch.
std::vector<NoiseDraw> sample_noise_draws(std::span<const Grid> batch, const NoiseSchedule& sched,
                                          Rng& rng);

/// Mean squared error || eps - eps_theta(sqrt(ab) x0 + sqrt(1 - ab) eps, t) ||^2
/// over the batch and pixels, with exact reverse-mode gradients.
LossAndGradients loss_and_gradients(const PredictorParams& params, std::span<const Grid> batch,
                                    std::span<const NoiseDraw> draws, const NoiseSchedule& sched);

LossAndGradients loss_and_gradients(const PredictorParams& params, std::span<const Grid> batch,
                                    const NoiseSchedule& sched, Rng& rng);

/// Affine map between natural-log intensities and the predictor's working range.
struct LogAffine {
  double scale = 1.0;
  double offset = 0.0;

  double to_model(double v) const { return scale * v + offset; }
  double from_model(double v) const { return (v - offset) / scale; }
  friend bool operator==(const LogAffine&, const LogAffine&) = default;
};

/// Maps the [min, max] range of the dataset onto [-1, 1].
LogAffine fit_log_affine(std::span<const LogImage> dataset);

}  // namespace cpdm

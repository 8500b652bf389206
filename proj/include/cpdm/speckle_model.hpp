#pragma once

#include <cstdint>
#include <memory>

#include "cpdm/grid.hpp"

namespace cpdm {

class Rng;

/// Multiplicative gamma speckle law. `looks` is the multilook count M (real, >= 1).
struct SpeckleParams {
  double looks = 4.0;
  double log_floor = 1e-3;

  void validate() const;
};

/// Unit-mean gamma density M^M / Gamma(M) * n^(M-1) * exp(-n M).
double gamma_speckle_pdf(double n, double looks);

/// Density of W = ln N when N follows gamma_speckle_pdf.
double log_speckle_density(double w, double looks);

struct LogMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean psi(M) - ln M and variance psi'(M) of ln N.
LogMoments log_speckle_moments(double looks);

/// One Gamma(shape = M, scale = 1/M) draw (Marsaglia-Tsang).
double sample_gamma_unit_mean(double looks, Rng& rng);

/// Independent unit-mean gamma field. Pixel i draws from its own counter
/// stream, so the result does not depend on traversal order.
Image sample_speckle(int width, int height, double looks, std::uint64_t seed);

/// clean * N elementwise. The output is not clipped; values above 1 are
/// legal mid-pipeline and are only clamped when written to disk.
Image apply_speckle(const Image& clean, double looks, std::uint64_t seed);

/// ln(max(v, log_floor)) elementwise.
LogImage log_transform(const Image& img, double log_floor);

/// exp(v) elementwise, clipped to [0, 1].
Image exp_transform(const LogImage& limg);

/// Pluggable estimator of the additive noise standard deviation of a log image.
class NoiseEstimator {
 public:
  virtual ~NoiseEstimator() = default;
  virtual double estimate(const LogImage& limg) const = 0;
};

/// Median absolute deviation of the finest diagonal Haar detail band,
/// divided by the Gaussian MAD constant. Needs at least 16x16 pixels.
class HaarMadEstimator final : public NoiseEstimator {
 public:
  double estimate(const LogImage& limg) const override;
};

double estimate_noise_std(const LogImage& limg);

}  // namespace cpdm

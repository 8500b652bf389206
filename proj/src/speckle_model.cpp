#include "cpdm/speckle_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cpdm/rng.hpp"
#include "cpdm/special_functions.hpp"

namespace cpdm {

namespace {

void check_looks(double looks) {
  if (!(looks >= 1.0) || !std::isfinite(looks)) {
    throw DomainError("multilook count must be a finite value >= 1, got " + std::to_string(looks));
  }
}

// ln(M^M / Gamma(M)); kept in log space so large M does not overflow.
double log_normaliser(double looks) { return looks * std::log(looks) - std::lgamma(looks); }

constexpr double kMadToSigma = 0.6744897501960817;
constexpr int kMinEstimatorSide = 16;

}  // namespace

void SpeckleParams::validate() const {
  check_looks(looks);
  if (!(log_floor > 0.0 && log_floor <= 0.1)) {
    throw DomainError("log_floor must lie in (0, 0.1]");
  }
}

double gamma_speckle_pdf(double n, double looks) {
  if (!(n > 0.0)) throw DomainError("gamma_speckle_pdf: n must be positive");
  check_looks(looks);
  return std::exp(log_normaliser(looks) + (looks - 1.0) * std::log(n) - n * looks);
}

double log_speckle_density(double w, double looks) {
  check_looks(looks);
  return std::exp(log_normaliser(looks) + looks * w - looks * std::exp(w));
}

LogMoments log_speckle_moments(double looks) {
  check_looks(looks);
  return {digamma(looks) - std::log(looks), trigamma(looks)};
}

double sample_gamma_unit_mean(double looks, Rng& rng) {
  const double d = looks - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / looks;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / looks;
  }
}

Image sample_speckle(int width, int height, double looks, std::uint64_t seed) {
  if (width <= 0 || height <= 0) throw ShapeError("sample_speckle: dimensions must be positive");
  check_looks(looks);
  Image out(width, height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    Rng rng(seed, i);
    out[i] = sample_gamma_unit_mean(looks, rng);
  }
  return out;
}

Image apply_speckle(const Image& clean, double looks, std::uint64_t seed) {
  Image noise = sample_speckle(clean.width(), clean.height(), looks, seed);
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] *= clean[i];
  return noise;
}

LogImage log_transform(const Image& img, double log_floor) {
  if (!(log_floor > 0.0)) throw DomainError("log_transform: log_floor must be positive");
  LogImage out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = std::log(std::max(img[i], log_floor));
  return out;
}

Image exp_transform(const LogImage& limg) {
  Image out(limg.width(), limg.height());
  for (std::size_t i = 0; i < limg.size(); ++i) out[i] = std::clamp(std::exp(limg[i]), 0.0, 1.0);
  return out;
}

double HaarMadEstimator::estimate(const LogImage& limg) const {
  if (limg.width() < kMinEstimatorSide || limg.height() < kMinEstimatorSide) {
    throw ShapeError("noise estimation needs at least 16x16 pixels");
  }
  const int bw = limg.width() / 2;
  const int bh = limg.height() / 2;
  std::vector<double> detail;
  detail.reserve(static_cast<std::size_t>(bw) * bh);
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      const int x = 2 * bx;
      const int y = 2 * by;
      const double hh = 0.5 * ((limg(x, y) - limg(x + 1, y)) - (limg(x, y + 1) - limg(x + 1, y + 1)));
      detail.push_back(std::abs(hh));
    }
  }
  auto mid = detail.begin() + static_cast<std::ptrdiff_t>(detail.size() / 2);
  std::nth_element(detail.begin(), mid, detail.end());
  double median = *mid;
  if (detail.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(detail.begin(), mid));
  }
  return median / kMadToSigma;
}

double estimate_noise_std(const LogImage& limg) { return HaarMadEstimator{}.estimate(limg); }

}  // namespace cpdm

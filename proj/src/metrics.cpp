#include "cpdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cpdm {

void check_region(const Image& img, const Rect& r) {
  if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0 || r.x + r.w > img.width() ||
      r.y + r.h > img.height()) {
    throw ShapeError("region (" + std::to_string(r.x) + ", " + std::to_string(r.y) + ", " +
                     std::to_string(r.w) + ", " + std::to_string(r.h) +
                     ") is empty or outside the image");
  }
}

RegionStats region_stats(const Image& img, const Rect& r) {
  check_region(img, r);
  const double n = static_cast<double>(r.w) * r.h;
  double sum = 0.0;
  double lo = img(r.x, r.y);
  double hi = lo;
  for (int y = r.y; y < r.y + r.h; ++y) {
    for (int x = r.x; x < r.x + r.w; ++x) {
      sum += img(x, y);
      lo = std::min(lo, img(x, y));
      hi = std::max(hi, img(x, y));
    }
  }
  // sum / n can miss a constant value by an ulp; keep constant regions exact.
  if (lo == hi) return {lo, 0.0};
  const double mean = sum / n;
  double ss = 0.0;
  for (int y = r.y; y < r.y + r.h; ++y) {
    for (int x = r.x; x < r.x + r.w; ++x) {
      const double d = img(x, y) - mean;
      ss += d * d;
    }
  }
  return {mean, ss / n};
}

double cnr(const Image& img, const RoiSpec& roi) {
  if (roi.signal_regions.empty()) throw ShapeError("cnr: no signal regions");
  const RegionStats bg = region_stats(img, roi.background_region);
  double total = 0.0;
  for (const Rect& r : roi.signal_regions) {
    const RegionStats sig = region_stats(img, r);
    const double denom = std::sqrt(sig.variance + bg.variance);
    if (denom == 0.0) throw DomainError("cnr: signal and background regions are both constant");
    total += 10.0 * std::log10(std::abs(sig.mean - bg.mean) / denom);
  }
  return total / static_cast<double>(roi.signal_regions.size());
}

double enl(const Image& img, const RoiSpec& roi) {
  const RegionStats s = region_stats(img, roi.homogeneous_region);
  if (s.variance == 0.0) return std::numeric_limits<double>::infinity();
  return s.mean * s.mean / s.variance;
}

double psnr(const Image& img, const Image& ref) {
  require_same_shape(img, ref, "psnr");
  if (img.empty()) throw ShapeError("psnr: empty images");
  double mse = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double d = img[i] - ref[i];
    mse += d * d;
  }
  mse /= static_cast<double>(img.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

}  // namespace cpdm

#pragma once

#include <vector>

#include "cpdm/grid.hpp"

namespace cpdm {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct RoiSpec {
  std::vector<Rect> signal_regions;
  Rect background_region;
  Rect homogeneous_region;
};

struct RegionStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance
};

/// Throws ShapeError unless the rectangle is non-empty and inside the image.
void check_region(const Image& img, const Rect& r);
RegionStats region_stats(const Image& img, const Rect& r);

/// Mean over signal regions of 10 log10(|mu_r - mu_b| / sqrt(var_r + var_b)), in dB.
double cnr(const Image& img, const RoiSpec& roi);

/// mu^2 / var over the homogeneous region; +infinity when the region is constant.
double enl(const Image& img, const RoiSpec& roi);

/// 10 log10(1 / MSE); +infinity for identical images.
double psnr(const Image& img, const Image& ref);

}  // namespace cpdm

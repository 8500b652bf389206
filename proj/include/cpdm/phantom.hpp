#pragma once

#include <cstdint>
#include <vector>

#include "cpdm/grid.hpp"
#include "cpdm/metrics.hpp"
#include "json.hpp"

namespace cpdm {

/// A bright circular-arc band. Positions are fractions of the image width
/// (x) and height (y); radius and thickness are fractions of min(width, height).
struct PhantomLayer {
  double center_x = 0.5;
  double center_y = 1.3;
  double radius = 1.0;
  double thickness = 0.06;
  double intensity = 0.7;
};

/// Synthetic stand-in for an anterior-segment scan: curved bands over a dark
/// background. `seed` drives a small jitter of every layer's centre and radius.
struct PhantomSpec {
  int width = 128;
  int height = 128;
  double background = 0.03;
  double jitter = 0.02;
  std::uint64_t seed = 0;
  std::vector<PhantomLayer> layers;

  void validate() const;
};

Image generate_phantom(const PhantomSpec& spec);

/// Five bands loosely arranged like cornea, iris and lens.
PhantomSpec default_phantom_spec(int width = 128, int height = 128, std::uint64_t seed = 0);

/// A randomised variant of the default layout, for building datasets.
PhantomSpec random_phantom_spec(int width, int height, std::uint64_t seed);

/// Picks ROIs on a clean phantom: the largest flat background square (used for
/// both background and homogeneous regions) and up to `max_signal` bright
/// windows of side `signal_side`.
RoiSpec derive_roi(const Image& clean, double background, int max_signal = 5,
                   int signal_side = 4);

nlohmann::json phantom_spec_to_json(const PhantomSpec& spec);
PhantomSpec phantom_spec_from_json(const nlohmann::json& j);

}  // namespace cpdm

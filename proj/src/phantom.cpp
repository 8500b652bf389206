#include "cpdm/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "cpdm/rng.hpp"

namespace cpdm {

void PhantomSpec::validate() const {
  if (width < 8 || height < 8) throw DomainError("phantom must be at least 8x8");
  if (!(background >= 0.0 && background <= 1.0)) throw DomainError("background outside [0, 1]");
  if (!(jitter >= 0.0 && jitter < 0.5)) throw DomainError("jitter must lie in [0, 0.5)");
  for (const auto& l : layers) {
    if (!(l.radius > 0.0) || !(l.thickness > 0.0)) {
      throw DomainError("phantom layer radius and thickness must be positive");
    }
    if (!(l.intensity >= 0.0 && l.intensity <= 1.0)) {
      throw DomainError("phantom layer intensity outside [0, 1]");
    }
    if (l.thickness >= 2.0 * l.radius) throw DomainError("phantom layer thicker than its arc");
    if (!std::isfinite(l.center_x) || !std::isfinite(l.center_y)) {
      throw DomainError("phantom layer centre must be finite");
    }
  }
}

Image generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const double side = std::min(spec.width, spec.height);
  Image img(spec.width, spec.height, spec.background);
  Rng rng(spec.seed, 0x9a9);
  for (const auto& layer : spec.layers) {
    const double jx = spec.jitter * (2.0 * rng.uniform() - 1.0);
    const double jy = spec.jitter * (2.0 * rng.uniform() - 1.0);
    const double jr = spec.jitter * (2.0 * rng.uniform() - 1.0);
    const double cx = (layer.center_x + jx) * spec.width;
    const double cy = (layer.center_y + jy) * spec.height;
    const double radius = (layer.radius + jr) * side;
    const double half = 0.5 * layer.thickness * side;
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        const double d = std::abs(std::hypot(dx, dy) - radius);
        // One pixel of linear edge roll-off.
        const double coverage = std::clamp(half - d + 0.5, 0.0, 1.0);
        if (coverage <= 0.0) continue;
        const double rel = std::min(d / half, 1.0);
        const double value = layer.intensity * (1.0 - 0.2 * rel * rel);
        const double blended = coverage * value + (1.0 - coverage) * img(x, y);
        img(x, y) = std::max(img(x, y), blended);
      }
    }
  }
  return img;
}

PhantomSpec default_phantom_spec(int width, int height, std::uint64_t seed) {
  PhantomSpec spec;
  spec.width = width;
  spec.height = height;
  spec.seed = seed;
  spec.layers = {
      {0.5, 1.30, 1.05, 0.08, 0.85},  // corneal stroma
      {0.5, 1.30, 0.96, 0.03, 0.60},  // endothelium
      {0.5, 1.30, 1.15, 0.04, 0.75},  // epithelium
      {0.5, 2.50, 1.90, 0.06, 0.80},  // iris plane
      {0.5, 1.60, 0.85, 0.05, 0.65},  // anterior lens capsule
  };
  return spec;
}

PhantomSpec random_phantom_spec(int width, int height, std::uint64_t seed) {
  PhantomSpec spec = default_phantom_spec(width, height, seed);
  Rng rng(seed, 0x5bec);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  spec.background = between(0.02, 0.06);
  for (auto& l : spec.layers) {
    l.center_x = between(0.3, 0.7);
    l.center_y += between(-0.15, 0.15);
    l.thickness *= between(0.7, 1.4);
    l.intensity = between(0.45, 0.9);
  }
  const int keep = 3 + static_cast<int>(rng.next_u64() % 3);
  spec.layers.resize(static_cast<std::size_t>(keep));
  return spec;
}

RoiSpec derive_roi(const Image& clean, double background, int max_signal, int signal_side) {
  RoiSpec roi;
  const int w = clean.width();
  const int h = clean.height();
  auto flat = [&](int x0, int y0, int s) {
    for (int y = y0; y < y0 + s; ++y)
      for (int x = x0; x < x0 + s; ++x)
        if (std::abs(clean(x, y) - background) > 1e-12) return false;
    return true;
  };
  bool found = false;
  for (int s = std::min(w, h) / 2; s >= 4 && !found; s -= 2) {
    for (int y = 0; y + s <= h && !found; y += 2) {
      for (int x = 0; x + s <= w && !found; x += 2) {
        if (flat(x, y, s)) {
          roi.background_region = {x, y, s, s};
          found = true;
        }
      }
    }
  }
  if (!found) throw DomainError("derive_roi: no flat background region");
  roi.homogeneous_region = roi.background_region;

  struct Candidate {
    double min_value;
    Rect rect;
  };
  std::vector<Candidate> candidates;
  const int s = signal_side;
  for (int y = 0; y + s <= h; ++y) {
    for (int x = 0; x + s <= w; ++x) {
      double lo = 1.0;
      for (int yy = y; yy < y + s; ++yy)
        for (int xx = x; xx < x + s; ++xx) lo = std::min(lo, clean(xx, yy));
      if (lo > 0.4) candidates.push_back({lo, {x, y, s, s}});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.min_value > b.min_value; });
  auto far_apart = [&](const Rect& r) {
    for (const Rect& o : roi.signal_regions) {
      if (std::abs(o.x - r.x) < 4 * s && std::abs(o.y - r.y) < 4 * s) return false;
    }
    return true;
  };
  for (const auto& c : candidates) {
    if (static_cast<int>(roi.signal_regions.size()) >= max_signal) break;
    if (far_apart(c.rect)) roi.signal_regions.push_back(c.rect);
  }
  if (roi.signal_regions.empty()) throw DomainError("derive_roi: no bright signal region");
  return roi;
}

nlohmann::json phantom_spec_to_json(const PhantomSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : spec.layers) {
    layers.push_back({{"center_x", l.center_x},
                      {"center_y", l.center_y},
                      {"radius", l.radius},
                      {"thickness", l.thickness},
                      {"intensity", l.intensity}});
  }
  return {{"width", spec.width},           {"height", spec.height}, {"background", spec.background},
          {"jitter", spec.jitter},         {"seed", spec.seed},     {"layers", layers}};
}

PhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
  PhantomSpec spec;
  try {
    spec.width = j.value("width", spec.width);
    spec.height = j.value("height", spec.height);
    spec.background = j.value("background", spec.background);
    spec.jitter = j.value("jitter", spec.jitter);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("layers")) {
      for (const auto& lj : j.at("layers")) {
        PhantomLayer l;
        l.center_x = lj.value("center_x", l.center_x);
        l.center_y = lj.value("center_y", l.center_y);
        l.radius = lj.at("radius").get<double>();
        l.thickness = lj.at("thickness").get<double>();
        l.intensity = lj.at("intensity").get<double>();
        spec.layers.push_back(l);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed phantom spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

}  // namespace cpdm

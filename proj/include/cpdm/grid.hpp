#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cpdm/errors.hpp"

namespace cpdm {

struct RawTag {};
struct LinearTag {};
struct LogTag {};

/// Row-major 2D grid of doubles. The tag separates linear-intensity images,
/// log-domain images and unitless working grids at compile time.
template <typename Tag>
class BasicGrid {
 public:
  BasicGrid() = default;

  BasicGrid(int width, int height, double fill = 0.0)
      : width_(checked_dim(width)),
        height_(checked_dim(height)),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  BasicGrid(int width, int height, std::vector<double> data)
      : width_(checked_dim(width)), height_(checked_dim(height)), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw ShapeError("grid payload of " + std::to_string(data_.size()) +
                       " values does not match " + std::to_string(width) + "x" +
                       std::to_string(height));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int x, int y) { return data_[index(x, y)]; }
  double operator()(int x, int y) const { return data_[index(x, y)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  template <typename OtherTag>
  bool same_shape(const BasicGrid<OtherTag>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const BasicGrid&, const BasicGrid&) = default;

 private:
  static int checked_dim(int d) {
    if (d < 0) throw ShapeError("negative grid dimension");
    return d;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

using Grid = BasicGrid<RawTag>;
using Image = BasicGrid<LinearTag>;
using LogImage = BasicGrid<LogTag>;

/// Reinterprets a grid under another domain tag without touching values.
template <typename To, typename From>
BasicGrid<To> grid_cast(const BasicGrid<From>& g) {
  return BasicGrid<To>(g.width(), g.height(), g.storage());
}

template <typename To, typename From>
BasicGrid<To> grid_cast(BasicGrid<From>&& g) {
  const int w = g.width();
  const int h = g.height();
  return BasicGrid<To>(w, h, std::move(g.storage()));
}

template <typename A, typename B>
void require_same_shape(const BasicGrid<A>& a, const BasicGrid<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.width()) + "x" +
                     std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                     std::to_string(b.height()));
  }
}

/// Index of the first non-finite value, or -1 if all are finite.
std::ptrdiff_t first_non_finite(std::span<const double> values);

template <typename Tag>
bool all_finite(const BasicGrid<Tag>& g) {
  return first_non_finite(g.values()) < 0;
}

/// Copies the w x h window whose top-left corner is (x0, y0).
template <typename Tag>
BasicGrid<Tag> crop(const BasicGrid<Tag>& g, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > g.width() || y0 + h > g.height()) {
    throw ShapeError("crop window out of bounds");
  }
  BasicGrid<Tag> out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = g(x0 + x, y0 + y);
  return out;
}

}  // namespace cpdm

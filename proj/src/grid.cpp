#include "cpdm/grid.hpp"

#include <cmath>

namespace cpdm {

std::ptrdiff_t first_non_finite(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

}  // namespace cpdm

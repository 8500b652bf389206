#include "cpdm/special_functions.hpp"

#include <cmath>

#include "cpdm/errors.hpp"

namespace cpdm {

namespace {
constexpr double kAsymptoticStart = 10.0;
}

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("digamma: argument must be positive");
  double acc = 0.0;
  while (x < kAsymptoticStart) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // B2/2, B4/4, ... B12/12
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("trigamma: argument must be positive");
  double acc = 0.0;
  while (x < kAsymptoticStart) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // 1/x + 1/(2x^2) + sum_k B_2k / x^(2k+1)
  static constexpr double kBernoulli[] = {1.0 / 6,   -1.0 / 30,       1.0 / 42,
                                          -1.0 / 30, 5.0 / 66,        -691.0 / 2730,
                                          7.0 / 6};
  double tail = 0.0;
  for (int k = 6; k >= 0; --k) tail = kBernoulli[k] + inv2 * tail;
  return acc + inv + 0.5 * inv2 + inv * inv2 * tail;
}

}  // namespace cpdm

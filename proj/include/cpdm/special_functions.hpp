#pragma once

namespace cpdm {

/// Digamma psi(x) for x > 0: upward recurrence to x >= 10, then the
/// asymptotic Bernoulli series.
double digamma(double x);

/// Trigamma psi'(x) for x > 0, same scheme as digamma.
double trigamma(double x);

}  // namespace cpdm

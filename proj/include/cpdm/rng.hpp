#pragma once

#include <cstdint>

namespace cpdm {

/// Counter-based generator: a (seed, stream) pair selects a SplitMix64 sequence,
/// so independent pixel or sample streams can be drawn in any order and still
/// reproduce bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform in the open interval (0, 1).
  double uniform();
  /// Standard normal (Box-Muller, pairs cached).
  double normal();
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);

  /// A child generator keyed on this generator's seed and a stream id.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace cpdm

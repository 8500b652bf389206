#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cpdm/diffusion.hpp"
#include "cpdm/errors.hpp"
#include "cpdm/noise_predictor.hpp"

namespace cpdm {

class CheckpointError : public Error {
 public:
  using Error::Error;
};
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointShapeError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointTruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

/// Everything needed to rebuild a trained predictor.
///
/// On disk: 8-byte magic "CPDMCKPT", u32 format version, u64 header length,
/// a JSON header (architecture, schedule, normalization, tensor names and
/// shapes), then per tensor a u64 element count followed by little-endian
/// float32 values. Integers are little-endian. Saving rounds parameters to
/// float32, so a loaded checkpoint re-saves to identical bytes.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  ScheduleConfig schedule;
  LogAffine normalization;
  PredictorParams params;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cpdm

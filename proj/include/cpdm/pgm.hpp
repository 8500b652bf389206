#pragma once

#include <filesystem>
#include <string>

#include "cpdm/errors.hpp"
#include "cpdm/grid.hpp"

namespace cpdm {

class ImageFormatError : public Error {
 public:
  using Error::Error;
};

/// Binary P5 greymap. Samples are mapped linearly to [0, 1] via maxval.
Image read_pgm(const std::filesystem::path& path);
Image decode_pgm(const std::string& bytes);

/// Writes P5 with maxval 255 (depth 8) or 65535 (depth 16). Values are
/// clipped to [0, 1] and rounded to the nearest level.
void write_pgm(const std::filesystem::path& path, const Image& img, int depth = 16);
std::string encode_pgm(const Image& img, int depth = 16);

}  // namespace cpdm

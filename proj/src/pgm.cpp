#include "cpdm/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cpdm {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_int(const char* field) {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) throw ImageFormatError(std::string("PGM ") + field + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw ImageFormatError(std::string("malformed PGM header: missing ") + field);
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void expect_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ImageFormatError("malformed PGM header: no separator before raster");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

Image decode_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw ImageFormatError("not a PNM file");
  if (bytes[1] == '2') throw ImageFormatError("unsupported PNM format P2 (ASCII); only binary P5 is supported");
  if (bytes[1] != '5') {
    throw ImageFormatError(std::string("unsupported PNM format P") + bytes[1] +
                           "; only binary P5 is supported");
  }
  HeaderReader header(bytes);
  const long width = header.read_int("width");
  const long height = header.read_int("height");
  const long maxval = header.read_int("maxval");
  header.expect_single_space();
  if (width <= 0 || height <= 0) throw ImageFormatError("PGM dimensions must be positive");
  if (maxval < 1 || maxval > 65535) throw ImageFormatError("PGM maxval must lie in [1, 65535]");

  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t need = count * bytes_per_sample;
  const std::size_t have = bytes.size() - header.pos();
  if (have < need) {
    throw ImageFormatError("truncated PGM raster: expected " + std::to_string(need) +
                           " bytes, found " + std::to_string(have));
  }
  Image img(static_cast<int>(width), static_cast<int>(height));
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + header.pos());
  const auto scale = static_cast<double>(maxval);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned v = raster[i * bytes_per_sample];
    if (bytes_per_sample == 2) v = (v << 8) | raster[i * 2 + 1];
    if (v > static_cast<unsigned>(maxval)) throw ImageFormatError("PGM sample exceeds maxval");
    img[i] = v / scale;
  }
  return img;
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageFormatError("cannot open image '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_pgm(ss.str());
  } catch (const ImageFormatError& e) {
    throw ImageFormatError(path.string() + ": " + e.what());
  }
}

std::string encode_pgm(const Image& img, int depth) {
  if (depth != 8 && depth != 16) throw ImageFormatError("PGM depth must be 8 or 16");
  if (img.empty()) throw ImageFormatError("cannot encode an empty image");
  const unsigned maxval = depth == 8 ? 255u : 65535u;
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                    "\n" + std::to_string(maxval) + "\n";
  const std::size_t header = out.size();
  out.resize(header + img.size() * (depth / 8));
  auto* raster = reinterpret_cast<unsigned char*>(out.data() + header);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::isfinite(img[i]) ? std::clamp(img[i], 0.0, 1.0) : 0.0;
    const auto q = static_cast<unsigned>(std::lround(v * maxval));
    if (depth == 8) {
      raster[i] = static_cast<unsigned char>(q);
    } else {
      raster[2 * i] = static_cast<unsigned char>(q >> 8);
      raster[2 * i + 1] = static_cast<unsigned char>(q & 0xFF);
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Image& img, int depth) {
  const std::string bytes = encode_pgm(img, depth);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageFormatError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageFormatError("failed writing '" + path.string() + "'");
}

}  // namespace cpdm

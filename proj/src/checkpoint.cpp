#include "cpdm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cpdm {

namespace {

constexpr char kMagic[8] = {'C', 'P', 'D', 'M', 'C', 'K', 'P', 'T'};

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
  }
}

class Cursor {
 public:
  explicit Cursor(const std::string& bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  template <typename T>
  T get_le(const char* what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n, const char* what) const {
    if (n > remaining()) {
      throw CheckpointTruncatedError(std::string("checkpoint truncated while reading ") + what +
                                     ": need " + std::to_string(n) + " bytes, " +
                                     std::to_string(remaining()) + " left");
    }
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

nlohmann::json header_json(const Checkpoint& ckpt) {
  const auto& arch = ckpt.params.arch();
  nlohmann::json h;
  h["format"] = "cpdm-checkpoint";
  h["architecture"] = {{"channels", arch.channels},
                       {"kernel", arch.kernel},
                       {"time_embedding_dim", arch.time_embedding_dim}};
  h["schedule"] = {{"steps", ckpt.schedule.steps},
                   {"beta_start", ckpt.schedule.beta_start},
                   {"beta_end", ckpt.schedule.beta_end}};
  h["normalization"] = {{"scale", ckpt.normalization.scale},
                        {"offset", ckpt.normalization.offset}};
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : ckpt.params.tensors()) {
    tensors.push_back({{"name", t.name}, {"shape", t.shape}});
  }
  h["tensors"] = std::move(tensors);
  return h;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, Checkpoint::kFormatVersion);
  const std::string header = header_json(ckpt).dump();
  put_le<std::uint64_t>(out, header.size());
  out += header;
  const auto values = ckpt.params.values();
  for (const auto& t : ckpt.params.tensors()) {
    put_le<std::uint64_t>(out, t.count);
    for (std::size_t i = 0; i < t.count; ++i) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(values[t.offset + i])));
    }
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Cursor cur(bytes);
  const std::string magic = cur.get_bytes(sizeof(kMagic), "magic");
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const auto version = cur.get_le<std::uint32_t>("version");
  if (version != Checkpoint::kFormatVersion) {
    throw CheckpointVersionError("checkpoint format version " + std::to_string(version) +
                                 " is not supported (expected version " +
                                 std::to_string(Checkpoint::kFormatVersion) + ")");
  }
  const auto header_len = cur.get_le<std::uint64_t>("header length");
  const std::string header_text = cur.get_bytes(static_cast<std::size_t>(header_len), "header");

  Checkpoint ckpt;
  ArchitectureConfig arch;
  std::vector<std::pair<std::string, std::vector<int>>> declared;
  try {
    const auto h = nlohmann::json::parse(header_text);
    arch.channels = h.at("architecture").at("channels").get<std::vector<int>>();
    arch.kernel = h.at("architecture").at("kernel").get<int>();
    arch.time_embedding_dim = h.at("architecture").at("time_embedding_dim").get<int>();
    ckpt.schedule.steps = h.at("schedule").at("steps").get<int>();
    ckpt.schedule.beta_start = h.at("schedule").at("beta_start").get<double>();
    ckpt.schedule.beta_end = h.at("schedule").at("beta_end").get<double>();
    ckpt.normalization.scale = h.at("normalization").at("scale").get<double>();
    ckpt.normalization.offset = h.at("normalization").at("offset").get<double>();
    for (const auto& t : h.at("tensors")) {
      declared.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<std::vector<int>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }

  try {
    ckpt.params = PredictorParams(arch);
  } catch (const Error& e) {
    throw CheckpointShapeError(std::string("invalid architecture in checkpoint: ") + e.what());
  }
  const auto& layout = ckpt.params.tensors();
  if (declared.size() != layout.size()) {
    throw CheckpointShapeError("checkpoint declares " + std::to_string(declared.size()) +
                               " tensors, architecture needs " + std::to_string(layout.size()));
  }
  auto values = ckpt.params.values();
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const auto& info = layout[k];
    if (declared[k].first != info.name || declared[k].second != info.shape) {
      throw CheckpointShapeError("tensor '" + declared[k].first +
                                 "' does not match the architecture layout");
    }
    const auto count = cur.get_le<std::uint64_t>("tensor length");
    if (count > cur.remaining() / 4) {
      throw CheckpointTruncatedError("checkpoint truncated in tensor '" + info.name + "': " +
                                     std::to_string(count) + " values declared, " +
                                     std::to_string(cur.remaining() / 4) + " present");
    }
    if (count != info.count) {
      throw CheckpointShapeError("tensor '" + info.name + "' holds " + std::to_string(count) +
                                 " values but its shape needs " + std::to_string(info.count));
    }
    for (std::size_t i = 0; i < info.count; ++i) {
      values[info.offset + i] =
          static_cast<double>(std::bit_cast<float>(cur.get_le<std::uint32_t>("tensor data")));
    }
  }
  if (cur.remaining() != 0) {
    throw CheckpointError("checkpoint has " + std::to_string(cur.remaining()) + " trailing bytes");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace cpdm

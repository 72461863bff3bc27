#include "ged/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ged/error.hpp"

namespace ged {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'G', 'E', 'D', 'C', 'K', 'P', 'T', '1'};
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  json header;
  header["version"] = 1;
  header["metadata"] = ckpt.metadata;
  header["tensors"] = json::array();
  for (const auto& p : ckpt.tensors)
    header["tensors"].push_back({{"name", p.name}, {"shape", p.shape}, {"dtype", "f64"}});
  std::string hs = header.dump();

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 8);
  std::uint32_t hlen = static_cast<std::uint32_t>(hs.size());
  out.insert(out.end(), reinterpret_cast<std::uint8_t*>(&hlen),
             reinterpret_cast<std::uint8_t*>(&hlen) + 4);
  out.insert(out.end(), hs.begin(), hs.end());
  for (const auto& p : ckpt.tensors) {
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(p.value.data());
    out.insert(out.end(), bytes, bytes + p.value.size() * sizeof(double));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw Error(ErrorCode::Parse, "not a checkpoint file (bad magic)");
  std::uint32_t hlen;
  std::memcpy(&hlen, bytes.data() + 8, 4);
  if (bytes.size() < 12 + hlen) throw Error(ErrorCode::Parse, "checkpoint truncated (header)");
  json header;
  try {
    header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + hlen);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("checkpoint header: ") + e.what());
  }
  if (header.value("version", 0) != 1)
    throw Error(ErrorCode::Parse, "unsupported checkpoint version");

  Checkpoint ckpt;
  for (auto& [k, v] : header["metadata"].items()) ckpt.metadata[k] = v.get<std::string>();
  std::size_t offset = 12 + hlen;
  for (const auto& t : header["tensors"]) {
    ad::Param p(t["name"].get<std::string>(), t["shape"].get<ad::Shape>());
    std::size_t nbytes = p.value.size() * sizeof(double);
    if (offset + nbytes > bytes.size())
      throw Error(ErrorCode::Parse, "checkpoint truncated (payload)");
    std::memcpy(p.value.data(), bytes.data() + offset, nbytes);
    offset += nbytes;
    ckpt.tensors.push_back(std::move(p));
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write checkpoint: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace ged

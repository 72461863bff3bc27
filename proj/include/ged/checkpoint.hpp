#pragma once

#include <map>
#include <string>
#include <vector>

#include "ged/autodiff.hpp"

namespace ged {

/// Checkpoint container: a versioned JSON header (metadata + tensor
/// manifest) followed by raw little-endian float64 payloads in manifest
/// order.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<ad::Param> tensors;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ged

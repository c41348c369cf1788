#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "dcitl/nn/layers.hpp"

namespace dcitl::nn {

// Versioned binary container: magic "DCITLCKP", u32 version, u64 header
// length, JSON header (layer descriptors, parameter shapes/offsets, seed,
// free-form objects), then raw little-endian doubles. Parameter values
// round-trip bit-exactly.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t seed = 0;
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, LayerStack> models;
  // Non-network payloads such as baseline models; stored inside the header.
  std::map<std::string, nlohmann::json> objects;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace dcitl::nn

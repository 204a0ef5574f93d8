#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cce {

/// Incremental SHA-256. Digests identify every content-addressed artifact
/// (images, schedules, manifests, idempotency keys).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> bytes);
  Sha256& update(std::string_view text);
  std::string hex_digest();

 private:
  void* ctx_;
  bool finished_ = false;
};

std::string sha256_hex(std::string_view text);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// Compact, key-sorted serialization used for every digest over JSON.
std::string canonical_dump(const nlohmann::json& value);
std::string json_digest(const nlohmann::json& value);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace cce

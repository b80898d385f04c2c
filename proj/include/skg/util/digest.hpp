#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace skg::util {

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// First 8 bytes of SHA-256, big-endian. Stable across platforms and runs.
std::uint64_t stable_hash64(std::string_view bytes);

}  // namespace skg::util

#include "skg/util/digest.hpp"

#include <array>

#include <openssl/sha.h>

namespace skg::util {

namespace {

std::array<unsigned char, SHA256_DIGEST_LENGTH> sha256(std::string_view bytes) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> out{};
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), out.data());
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  const auto md = sha256(bytes);
  std::string hex;
  hex.reserve(md.size() * 2);
  for (unsigned char c : md) {
    hex.push_back(kHex[c >> 4]);
    hex.push_back(kHex[c & 0x0f]);
  }
  return hex;
}

std::uint64_t stable_hash64(std::string_view bytes) {
  const auto md = sha256(bytes);
  std::uint64_t h = 0;
  for (int i = 0; i < 8; ++i) h = (h << 8) | md[i];
  return h;
}

}  // namespace skg::util

#include "skg/util/rng.hpp"

#include <string>

#include "skg/util/digest.hpp"

namespace skg::util {

Rng Rng::keyed(std::string_view key, std::uint64_t seed) {
  std::string material = std::to_string(seed);
  material.push_back('|');
  material.append(key);
  return Rng(stable_hash64(material));
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return x % bound;
}

}  // namespace skg::util

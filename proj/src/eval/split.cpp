#include "skg/eval/split.hpp"

#include <cmath>

#include "skg/error.hpp"
#include "skg/util/digest.hpp"

namespace skg::eval {

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view s) noexcept {
  for (auto x : {Split::Train, Split::Dev, Split::Test}) {
    if (to_string(x) == s) return x;
  }
  return std::nullopt;
}

void check_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.dev < 0 || r.test < 0 || std::abs(r.train + r.dev + r.test - 1.0) > 1e-9) {
    throw Error(Errc::OutOfRange, "split ratios must be non-negative and sum to 1",
                {{"train", r.train}, {"dev", r.dev}, {"test", r.test}});
  }
}

Split assign_split(std::string_view base_case_id, const SplitRatios& ratios, std::uint64_t seed) {
  check_ratios(ratios);
  const auto bucket = util::stable_hash64(std::to_string(seed) + "|" + std::string(base_case_id)) % 10000;
  const auto train_end = static_cast<std::uint64_t>(std::llround(ratios.train * 10000));
  const auto dev_end = static_cast<std::uint64_t>(std::llround((ratios.train + ratios.dev) * 10000));
  if (bucket < train_end) return Split::Train;
  if (bucket < dev_end) return Split::Dev;
  return Split::Test;
}

}  // namespace skg::eval

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace skg::eval {

enum class Split { Train, Dev, Test };

std::string_view to_string(Split s) noexcept;
std::optional<Split> parse_split(std::string_view s) noexcept;

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

/// Throws OutOfRange unless the ratios are non-negative and sum to 1.
void check_ratios(const SplitRatios& r);

/// Bucket (stable_hash64("<seed>|<base_case_id>") mod 10000) against the
/// cumulative ratio thresholds. Variants share their base case's split.
Split assign_split(std::string_view base_case_id, const SplitRatios& ratios, std::uint64_t seed);

}  // namespace skg::eval

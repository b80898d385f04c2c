#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/core/case.hpp"

namespace skg::corpus {

enum class CorruptionTarget { EvidenceAssets, MetadataFields, Both };

struct CorruptionSpec {
  double level = 0.0;  // fraction in [0, 1]
  std::uint64_t seed = 0;
  CorruptionTarget targets = CorruptionTarget::EvidenceAssets;
};

/// round(level * n) with halves rounded up. Throws OutOfRange outside [0, 1].
std::size_t corruption_count(double level, std::size_t n);

/// The order in which assets are removed for (case_id, seed). Removal at any
/// level takes a prefix of it, so lower levels remove subsets of higher ones.
std::vector<std::string> asset_removal_order(const ComplaintCase& c, std::uint64_t seed);

/// Removes corruption_count(level, |assets|) assets and blanks metadata
/// values naming a removed asset (its id or integrity hash). With metadata
/// targets, that many metadata fields (in their own seeded order) are blanked.
/// Level 0 returns the case unchanged.
ComplaintCase corrupt_evidence(const ComplaintCase& c, const CorruptionSpec& spec);

/// corrupt_evidence applied to a multimodal bench input object ({narrative,
/// assets, metadata, history_summary}) of base case `case_id`. Removal order
/// matches the case-level function for the same assets.
nlohmann::json corrupt_mm_inputs(const nlohmann::json& inputs, const std::string& case_id, const CorruptionSpec& spec);

}  // namespace skg::corpus

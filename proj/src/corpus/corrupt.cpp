#include "skg/corpus/corrupt.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "skg/error.hpp"
#include "skg/util/rng.hpp"

namespace skg::corpus {

std::size_t corruption_count(double level, std::size_t n) {
  if (!(level >= 0.0 && level <= 1.0)) throw Error(Errc::OutOfRange, "corruption level must lie in [0, 1]", {{"level", level}});
  // The epsilon absorbs binary representation error (0.15 * 10 must give 2).
  return static_cast<std::size_t>(std::floor(level * static_cast<double>(n) + 0.5 + 1e-9));
}

std::vector<std::string> asset_removal_order(const ComplaintCase& c, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& a : c.evidence_assets) ids.push_back(a.asset_id);
  auto rng = util::Rng::keyed("corrupt-assets:" + c.case_id, seed);
  rng.shuffle(std::span<std::string>(ids));
  return ids;
}

ComplaintCase corrupt_evidence(const ComplaintCase& c, const CorruptionSpec& spec) {
  const bool assets = spec.targets != CorruptionTarget::MetadataFields;
  const bool fields = spec.targets != CorruptionTarget::EvidenceAssets;
  ComplaintCase out = c;
  corruption_count(spec.level, 0);
  if (spec.level == 0.0) return out;

  if (assets) {
    const auto order = asset_removal_order(c, spec.seed);
    const std::set<std::string> removed(order.begin(),
                                        order.begin() + static_cast<std::ptrdiff_t>(
                                                            corruption_count(spec.level, order.size())));
    std::set<std::string> names(removed);
    for (const auto& a : c.evidence_assets) {
      if (removed.contains(a.asset_id) && !a.integrity_hash.empty()) names.insert(a.integrity_hash);
    }
    std::erase_if(out.evidence_assets, [&](const EvidenceAsset& a) { return removed.contains(a.asset_id); });
    for (auto& [key, value] : out.metadata) {
      if (value.is_string() && names.contains(value.as_string())) value = Value(std::string());
    }
  }
  if (fields) {
    std::vector<std::string> keys;
    for (const auto& [key, value] : c.metadata) keys.push_back(key);
    auto rng = util::Rng::keyed("corrupt-metadata:" + c.case_id, spec.seed);
    rng.shuffle(std::span<std::string>(keys));
    keys.resize(corruption_count(spec.level, keys.size()));
    for (const auto& key : keys) out.metadata[key] = Value(std::string());
  }
  return out;
}

nlohmann::json corrupt_mm_inputs(const nlohmann::json& inputs, const std::string& case_id, const CorruptionSpec& spec) {
  ComplaintCase c;
  c.case_id = case_id;
  const auto& refs = inputs.at("assets");
  for (const auto& ref : refs) {
    EvidenceAsset a;
    a.asset_id = ref.at("asset_id").get<std::string>();
    a.integrity_hash = ref.value("integrity_hash", std::string());
    c.evidence_assets.push_back(std::move(a));
  }
  if (inputs.contains("metadata")) c.metadata = attrs_from_json(inputs.at("metadata"), "inputs.metadata");

  const auto corrupted = corrupt_evidence(c, spec);
  std::set<std::string> kept;
  for (const auto& a : corrupted.evidence_assets) kept.insert(a.asset_id);
  nlohmann::json out = inputs;
  out["assets"] = nlohmann::json::array();
  for (const auto& ref : refs) {
    if (kept.contains(ref.at("asset_id").get<std::string>())) out["assets"].push_back(ref);
  }
  if (inputs.contains("metadata")) out["metadata"] = attrs_to_json(corrupted.metadata);
  return out;
}

}  // namespace skg::corpus

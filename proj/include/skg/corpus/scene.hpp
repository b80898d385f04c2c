#pragma once

#include <cstdint>

#include "skg/core/case.hpp"
#include "skg/core/graph.hpp"

namespace skg::corpus {

// Synthetic complaint population used for mocks, sweeps and examples. Cases
// carry their scene fields in metadata (complaint_type, order_status,
// service_stage, responsibility, merchant_response, evidence_quality,
// policy_applies) so a graph can be derived from them mechanically.

/// The index-th case of the population drawn with `seed`.
ComplaintCase synthetic_case(std::uint64_t index, std::uint64_t seed);

/// Action a careful reviewer picks for the case's scene fields.
DecisionAction derive_action(const ComplaintCase& c);

/// Scene graph for a case with scene metadata: order lifecycle timeline,
/// one Evidence node per asset, one Policy node per clause, the final
/// Decision and a few weakly coupled context nodes. Throws MissingAttribute
/// when a scene field is absent.
SceneKnowledgeGraph scene_from_case(const ComplaintCase& c);

}  // namespace skg::corpus

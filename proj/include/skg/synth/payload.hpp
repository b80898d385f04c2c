#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "skg/core/bundle.hpp"

namespace skg::synth {

inline constexpr std::string_view kBundleFence = "skg-bundle";
inline constexpr std::string_view kFindingsFence = "skg-findings";

/// Bodies of the ``` blocks whose info string is `label`.
std::vector<std::string> fenced_blocks(std::string_view text, std::string_view label);

/// Wraps a bundle payload in its fence.
std::string render_payload(const GenerationBundle& b);

/// Extracts the single skg-bundle block, schema-checks it and validates the
/// graph. Errors (NoPayloadBlock, MultiplePayloadBlocks, SyntaxError,
/// SchemaError, VersionError, StructuralError) carry the raw text in
/// details()["raw"]. Without `graph_required` a missing graph is accepted.
GenerationBundle parse_bundle(std::string_view raw, std::size_t expected_iteration, bool graph_required = true);

}  // namespace skg::synth

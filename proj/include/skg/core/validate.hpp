#pragma once

#include <map>
#include <string>
#include <vector>

#include "skg/core/graph.hpp"

namespace skg {

struct StructuralViolation {
  std::string code;  // e.g. "dangling-endpoint", "multiple-final-decisions"
  std::vector<std::string> refs;
  std::string message;

  friend bool operator==(const StructuralViolation&, const StructuralViolation&) = default;
};

struct ValidationResult {
  std::vector<StructuralViolation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool has(std::string_view code) const;
};

/// Checks every structural invariant of a graph. Violations are data: this
/// never throws.
ValidationResult validate_graph(const SceneKnowledgeGraph& g);

/// Coupling class each node should carry under the strong/weak taxonomy.
std::map<std::string, CouplingClass> classify_nodes(const SceneKnowledgeGraph& g);

/// Rewrites every node's coupling field from the taxonomy.
void stamp_couplings(SceneKnowledgeGraph& g);

}  // namespace skg

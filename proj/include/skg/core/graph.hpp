#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "skg/core/types.hpp"
#include "skg/core/value.hpp"

namespace skg {

struct SkgNode {
  std::string node_id;
  NodeKind kind = NodeKind::Entity;
  std::string label;
  AttrMap attributes;
  CouplingClass coupling = CouplingClass::Weak;

  const Value* attr(std::string_view key) const;
  /// String attribute or nullopt when absent or not a string.
  std::optional<std::string> attr_string(std::string_view key) const;

  friend bool operator==(const SkgNode&, const SkgNode&) = default;
};

struct SkgEdge {
  std::string edge_id;
  std::string src;
  std::string dst;
  RelationType relation = RelationType::RefersTo;
  AttrMap attributes;

  friend bool operator==(const SkgEdge&, const SkgEdge&) = default;
};

// Primitive graph edits. Every entry names its target by id so a log replays
// deterministically against its parent.
namespace edit {

/// Sets (value) or erases (nullopt) one node attribute.
struct SetAttribute {
  std::string node_id;
  std::string key;
  std::optional<Value> value;
  friend bool operator==(const SetAttribute&, const SetAttribute&) = default;
};
struct AddNode {
  SkgNode node;
  friend bool operator==(const AddNode&, const AddNode&) = default;
};
/// Requires the node to have no incident edges at replay time.
struct RemoveNode {
  std::string node_id;
  friend bool operator==(const RemoveNode&, const RemoveNode&) = default;
};
struct AddEdge {
  SkgEdge edge;
  friend bool operator==(const AddEdge&, const AddEdge&) = default;
};
struct RemoveEdge {
  std::string edge_id;
  friend bool operator==(const RemoveEdge&, const RemoveEdge&) = default;
};
struct SetDim {
  SceneDim dim = SceneDim::ComplaintType;
  std::string value;
  friend bool operator==(const SetDim&, const SetDim&) = default;
};

}  // namespace edit

using EditOp = std::variant<edit::SetAttribute, edit::AddNode, edit::RemoveNode, edit::AddEdge,
                            edit::RemoveEdge, edit::SetDim>;
using EditLog = std::vector<EditOp>;

struct CanonicalProvenance {
  friend bool operator==(const CanonicalProvenance&, const CanonicalProvenance&) = default;
};
struct GeneralizedProvenance {
  std::string parent_graph_id;
  EditLog edit_log;
  friend bool operator==(const GeneralizedProvenance&, const GeneralizedProvenance&) = default;
};
using Provenance = std::variant<CanonicalProvenance, GeneralizedProvenance>;

using SceneDims = std::map<SceneDim, std::string>;

struct SceneKnowledgeGraph {
  std::string graph_id;
  std::string base_case_id;
  Provenance provenance;
  std::vector<SkgNode> nodes;
  std::vector<SkgEdge> edges;
  SceneDims scene_dims;

  const SkgNode* find_node(std::string_view id) const;
  SkgNode* find_node(std::string_view id);
  const SkgEdge* find_edge(std::string_view id) const;

  /// The unique Decision node with final=true, or nullptr when absent/ambiguous.
  const SkgNode* final_decision() const;
  std::optional<DecisionAction> final_action() const;

  std::optional<std::string> dim(SceneDim d) const;
  bool is_generalized() const { return std::holds_alternative<GeneralizedProvenance>(provenance); }
};

}  // namespace skg

#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "skg/core/graph.hpp"

namespace skg {

inline constexpr std::string_view kSchemaVersion = "1";

nlohmann::json node_to_json(const SkgNode& n);
nlohmann::json edge_to_json(const SkgEdge& e);
nlohmann::json edit_op_to_json(const EditOp& op);
nlohmann::json edit_log_to_json(const EditLog& log);
nlohmann::json graph_to_json(const SceneKnowledgeGraph& g);

SkgNode node_from_json(const nlohmann::json& j, const std::string& path);
SkgEdge edge_from_json(const nlohmann::json& j, const std::string& path);
EditLog edit_log_from_json(const nlohmann::json& j, const std::string& path);
/// Schema-checks a graph document (no structural validation).
SceneKnowledgeGraph graph_from_json(const nlohmann::json& j, const std::string& path = "");

/// Deterministic bytes of a valid graph: sorted keys, nodes by node_id, edges
/// by edge_id. Throws InvalidGraph (with the violations) for invalid graphs.
std::string canonicalize(const SceneKnowledgeGraph& g);

/// Same byte layout as canonicalize without the validity precondition.
std::string canonical_bytes(const SceneKnowledgeGraph& g);

/// Graph equality: equal canonical bytes.
bool canonically_equal(const SceneKnowledgeGraph& a, const SceneKnowledgeGraph& b);

/// SHA-256 hex of the canonical bytes.
std::string graph_digest(const SceneKnowledgeGraph& g);

/// Inverse of canonicalize. SyntaxError carries the byte offset, SchemaError
/// the field path, VersionError an unsupported schema_version.
SceneKnowledgeGraph parse_graph(std::string_view bytes);

}  // namespace skg

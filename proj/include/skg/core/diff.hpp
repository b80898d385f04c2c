#pragma once

#include <set>
#include <string>

#include "skg/core/graph.hpp"

namespace skg {

/// Replays an edit log against a graph and restamps couplings. Throws
/// InvalidEdit naming the first entry that does not apply.
SceneKnowledgeGraph apply_edits(const SceneKnowledgeGraph& g, const EditLog& log);

/// Per-element minimal edit sequence turning a's content (nodes, edges, scene
/// dims) into b's. Node kind or label changes become remove+add with the
/// node's incident edges cycled around them.
EditLog diff_graphs(const SceneKnowledgeGraph& a, const SceneKnowledgeGraph& b);

struct NodePartition {
  std::set<std::string> strong;
  std::set<std::string> weak;
};

/// Splits nodes into strongly and weakly coupled sets. Throws CouplingMismatch
/// (listing the nodes) when a stored coupling disagrees with the taxonomy.
NodePartition partition_nodes(const SceneKnowledgeGraph& g);

}  // namespace skg

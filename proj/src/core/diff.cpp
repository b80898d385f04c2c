#include "skg/core/diff.hpp"

#include <algorithm>
#include <map>

#include "skg/core/validate.hpp"
#include "skg/error.hpp"

namespace skg {

namespace {

[[noreturn]] void bad_edit(std::size_t index, const std::string& what) {
  throw Error(Errc::InvalidEdit, "edit #" + std::to_string(index) + ": " + what, {{"index", index}});
}

}  // namespace

SceneKnowledgeGraph apply_edits(const SceneKnowledgeGraph& g, const EditLog& log) {
  SceneKnowledgeGraph out = g;
  for (std::size_t i = 0; i < log.size(); ++i) {
    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, edit::SetAttribute>) {
            SkgNode* n = out.find_node(op.node_id);
            if (n == nullptr) bad_edit(i, "no node " + op.node_id);
            if (op.value) {
              n->attributes[op.key] = *op.value;
            } else {
              n->attributes.erase(op.key);
            }
          } else if constexpr (std::is_same_v<T, edit::AddNode>) {
            if (out.find_node(op.node.node_id) != nullptr) bad_edit(i, "node exists " + op.node.node_id);
            out.nodes.push_back(op.node);
          } else if constexpr (std::is_same_v<T, edit::RemoveNode>) {
            const auto it = std::find_if(out.nodes.begin(), out.nodes.end(),
                                         [&](const SkgNode& n) { return n.node_id == op.node_id; });
            if (it == out.nodes.end()) bad_edit(i, "no node " + op.node_id);
            const bool incident = std::any_of(out.edges.begin(), out.edges.end(), [&](const SkgEdge& e) {
              return e.src == op.node_id || e.dst == op.node_id;
            });
            if (incident) bad_edit(i, "node " + op.node_id + " still has edges");
            out.nodes.erase(it);
          } else if constexpr (std::is_same_v<T, edit::AddEdge>) {
            if (out.find_edge(op.edge.edge_id) != nullptr) bad_edit(i, "edge exists " + op.edge.edge_id);
            if (out.find_node(op.edge.src) == nullptr || out.find_node(op.edge.dst) == nullptr) {
              bad_edit(i, "edge " + op.edge.edge_id + " has a missing endpoint");
            }
            out.edges.push_back(op.edge);
          } else if constexpr (std::is_same_v<T, edit::RemoveEdge>) {
            const auto it = std::find_if(out.edges.begin(), out.edges.end(),
                                         [&](const SkgEdge& e) { return e.edge_id == op.edge_id; });
            if (it == out.edges.end()) bad_edit(i, "no edge " + op.edge_id);
            out.edges.erase(it);
          } else {
            out.scene_dims[op.dim] = op.value;
          }
        },
        log[i]);
  }
  stamp_couplings(out);
  return out;
}

EditLog diff_graphs(const SceneKnowledgeGraph& a, const SceneKnowledgeGraph& b) {
  std::map<std::string, const SkgNode*> na, nb;
  for (const auto& n : a.nodes) na[n.node_id] = &n;
  for (const auto& n : b.nodes) nb[n.node_id] = &n;
  std::map<std::string, const SkgEdge*> ea, eb;
  for (const auto& e : a.edges) ea[e.edge_id] = &e;
  for (const auto& e : b.edges) eb[e.edge_id] = &e;

  // Nodes that must leave a: gone from b, or changed kind/label.
  std::set<std::string> replaced;
  for (const auto& [id, n] : na) {
    const auto it = nb.find(id);
    if (it == nb.end() || it->second->kind != n->kind || it->second->label != n->label) replaced.insert(id);
  }
  const auto touches_replaced = [&](const SkgEdge& e) { return replaced.contains(e.src) || replaced.contains(e.dst); };

  EditLog log;
  std::set<std::string> removed_edges;
  for (const auto& [id, e] : ea) {
    const auto it = eb.find(id);
    if (it == eb.end() || !(*it->second == *e) || touches_replaced(*e)) {
      log.push_back(edit::RemoveEdge{id});
      removed_edges.insert(id);
    }
  }
  for (const auto& id : replaced) log.push_back(edit::RemoveNode{id});
  for (const auto& [id, n] : nb) {
    if (!na.contains(id) || replaced.contains(id)) log.push_back(edit::AddNode{*n});
  }
  for (const auto& [id, n] : na) {
    if (replaced.contains(id)) continue;
    const SkgNode& target = *nb.at(id);
    std::set<std::string> keys;
    for (const auto& [k, _] : n->attributes) keys.insert(k);
    for (const auto& [k, _] : target.attributes) keys.insert(k);
    for (const auto& k : keys) {
      const Value* before = n->attr(k);
      const Value* after = target.attr(k);
      if (before != nullptr && after != nullptr && *before == *after) continue;
      log.push_back(edit::SetAttribute{id, k, after ? std::optional<Value>(*after) : std::nullopt});
    }
  }
  for (const auto& [id, e] : eb) {
    if (!ea.contains(id) || removed_edges.contains(id)) log.push_back(edit::AddEdge{*e});
  }
  for (const auto& [d, v] : b.scene_dims) {
    if (a.dim(d) != v) log.push_back(edit::SetDim{d, v});
  }
  return log;
}

NodePartition partition_nodes(const SceneKnowledgeGraph& g) {
  const auto classes = classify_nodes(g);
  NodePartition out;
  std::vector<std::string> mismatched;
  for (const auto& n : g.nodes) {
    const auto expected = classes.at(n.node_id);
    if (expected != n.coupling) mismatched.push_back(n.node_id);
    (expected == CouplingClass::Strong ? out.strong : out.weak).insert(n.node_id);
  }
  if (!mismatched.empty()) {
    throw Error(Errc::CouplingMismatch, "stored coupling disagrees with taxonomy for " + mismatched.front(),
                {{"nodes", mismatched}});
  }
  return out;
}

}  // namespace skg

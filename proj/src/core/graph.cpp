#include "skg/core/graph.hpp"

#include <algorithm>

#include "skg/core/vocab.hpp"

namespace skg {

const Value* SkgNode::attr(std::string_view key) const {
  const auto it = attributes.find(std::string(key));
  return it == attributes.end() ? nullptr : &it->second;
}

std::optional<std::string> SkgNode::attr_string(std::string_view key) const {
  const Value* v = attr(key);
  if (v == nullptr || !v->is_string()) return std::nullopt;
  return v->as_string();
}

const SkgNode* SceneKnowledgeGraph::find_node(std::string_view id) const {
  const auto it = std::find_if(nodes.begin(), nodes.end(), [&](const SkgNode& n) { return n.node_id == id; });
  return it == nodes.end() ? nullptr : &*it;
}

SkgNode* SceneKnowledgeGraph::find_node(std::string_view id) {
  const auto it = std::find_if(nodes.begin(), nodes.end(), [&](const SkgNode& n) { return n.node_id == id; });
  return it == nodes.end() ? nullptr : &*it;
}

const SkgEdge* SceneKnowledgeGraph::find_edge(std::string_view id) const {
  const auto it = std::find_if(edges.begin(), edges.end(), [&](const SkgEdge& e) { return e.edge_id == id; });
  return it == edges.end() ? nullptr : &*it;
}

const SkgNode* SceneKnowledgeGraph::final_decision() const {
  const SkgNode* found = nullptr;
  for (const auto& n : nodes) {
    if (n.kind != NodeKind::Decision) continue;
    const Value* f = n.attr(vocab::kFinal);
    if (f != nullptr && f->is_bool() && f->as_bool()) {
      if (found != nullptr) return nullptr;
      found = &n;
    }
  }
  return found;
}

std::optional<DecisionAction> SceneKnowledgeGraph::final_action() const {
  const SkgNode* d = final_decision();
  if (d == nullptr) return std::nullopt;
  const auto action = d->attr_string(vocab::kAction);
  if (!action) return std::nullopt;
  return parse_action(*action);
}

std::optional<std::string> SceneKnowledgeGraph::dim(SceneDim d) const {
  const auto it = scene_dims.find(d);
  if (it == scene_dims.end()) return std::nullopt;
  return it->second;
}

}  // namespace skg

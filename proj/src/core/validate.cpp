#include "skg/core/validate.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "skg/core/vocab.hpp"

namespace skg {

bool ValidationResult::has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(), [&](const auto& v) { return v.code == code; });
}

std::map<std::string, CouplingClass> classify_nodes(const SceneKnowledgeGraph& g) {
  std::set<std::string> on_timeline;
  for (const auto& e : g.edges) {
    if (e.relation == RelationType::Precedes) {
      on_timeline.insert(e.src);
      on_timeline.insert(e.dst);
    }
  }
  std::map<std::string, CouplingClass> out;
  for (const auto& n : g.nodes) {
    bool strong = false;
    switch (n.kind) {
      case NodeKind::Policy:
      case NodeKind::Decision:
      case NodeKind::Evidence:
        strong = true;
        break;
      case NodeKind::Event:
        strong = on_timeline.contains(n.node_id);
        break;
      case NodeKind::State:
        strong = n.attr(vocab::kOrderStatus) != nullptr || n.attr(vocab::kServiceStage) != nullptr ||
                 n.attr(vocab::kResponsibility) != nullptr || n.attr(vocab::kComplaintType) != nullptr;
        break;
      case NodeKind::Entity:
        strong = n.attr(vocab::kComplaintType) != nullptr;
        break;
    }
    out[n.node_id] = strong ? CouplingClass::Strong : CouplingClass::Weak;
  }
  return out;
}

void stamp_couplings(SceneKnowledgeGraph& g) {
  const auto classes = classify_nodes(g);
  for (auto& n : g.nodes) n.coupling = classes.at(n.node_id);
}

namespace {

class Checker {
 public:
  explicit Checker(const SceneKnowledgeGraph& g) : g_(g) {}

  ValidationResult run() {
    header();
    nodes();
    edges();
    timeline();
    decisions();
    coverage_kinds();
    return std::move(result_);
  }

 private:
  void add(std::string code, std::vector<std::string> refs, std::string message) {
    result_.violations.push_back({std::move(code), std::move(refs), std::move(message)});
  }

  void header() {
    if (g_.graph_id.empty()) add("empty-graph-id", {}, "graph_id is empty");
    if (g_.base_case_id.empty()) add("empty-base-case-id", {}, "base_case_id is empty");
    for (SceneDim d : kAllSceneDims) {
      const auto v = g_.dim(d);
      if (!v || v->empty()) add("missing-scene-dim", {std::string(to_string(d))}, "scene dimension missing");
    }
    if (const auto action = g_.dim(SceneDim::ResolutionAction); action && !action->empty() && !parse_action(*action)) {
      add("invalid-scene-dim", {"resolution_action"}, "resolution_action is not a decision action");
    }
    if (const auto* gen = std::get_if<GeneralizedProvenance>(&g_.provenance)) {
      if (gen->parent_graph_id.empty() || gen->edit_log.empty()) {
        add("generalized-provenance", {g_.graph_id}, "generalized graph needs a parent and a non-empty edit log");
      }
    }
  }

  void nodes() {
    std::set<std::string> seen;
    const auto classes = classify_nodes(g_);
    for (const auto& n : g_.nodes) {
      if (n.node_id.empty()) add("empty-node-id", {}, "node with empty id");
      if (!seen.insert(n.node_id).second) add("duplicate-node-id", {n.node_id}, "node id used twice");
      if (n.label.empty()) add("empty-label", {n.node_id}, "node label is empty");
      if (n.kind == NodeKind::Evidence) {
        const auto validity = n.attr_string(vocab::kValidity);
        const auto& allowed = vocab::validity_values();
        if (!validity || std::find(allowed.begin(), allowed.end(), *validity) == allowed.end()) {
          add("evidence-validity", {n.node_id}, "evidence node needs validity in {sufficient, insufficient, contested}");
        }
      }
      if (n.kind == NodeKind::Decision) {
        const auto action = n.attr_string(vocab::kAction);
        if (!action || !parse_action(*action)) add("decision-action", {n.node_id}, "decision node needs a valid action");
        if (const Value* f = n.attr(vocab::kFinal); f != nullptr && !f->is_bool()) {
          add("decision-final", {n.node_id}, "final must be boolean");
        }
      }
      if (const auto it = classes.find(n.node_id); it != classes.end() && it->second != n.coupling) {
        add("coupling-mismatch", {n.node_id}, "stored coupling disagrees with taxonomy");
      }
    }
  }

  void edges() {
    std::set<std::string> seen;
    for (const auto& e : g_.edges) {
      if (e.edge_id.empty()) add("empty-edge-id", {}, "edge with empty id");
      if (!seen.insert(e.edge_id).second) add("duplicate-edge-id", {e.edge_id}, "edge id used twice");
      const SkgNode* src = g_.find_node(e.src);
      const SkgNode* dst = g_.find_node(e.dst);
      if (src == nullptr || dst == nullptr) {
        add("dangling-endpoint", {e.edge_id}, "edge endpoint does not exist");
        continue;
      }
      if (e.src == e.dst && e.relation != RelationType::RefersTo) {
        add("self-loop", {e.edge_id}, "only refers_to edges may be self loops");
      }
      if ((e.relation == RelationType::Supports || e.relation == RelationType::Contradicts) &&
          src->kind != NodeKind::Evidence && src->kind != NodeKind::Event) {
        add("support-source", {e.edge_id}, "supports/contradicts must originate at Evidence or Event");
      }
    }
  }

  void timeline() {
    // Kahn's algorithm over precedes edges; leftovers sit on a cycle.
    std::map<std::string, std::vector<std::string>> out;
    std::map<std::string, int> indegree;
    for (const auto& e : g_.edges) {
      if (e.relation != RelationType::Precedes) continue;
      if (g_.find_node(e.src) == nullptr || g_.find_node(e.dst) == nullptr) continue;
      out[e.src].push_back(e.dst);
      indegree[e.src];
      ++indegree[e.dst];
    }
    std::deque<std::string> ready;
    for (const auto& [id, deg] : indegree) {
      if (deg == 0) ready.push_back(id);
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
      const auto id = ready.front();
      ready.pop_front();
      ++visited;
      for (const auto& next : out[id]) {
        if (--indegree[next] == 0) ready.push_back(next);
      }
    }
    if (visited != indegree.size()) {
      std::vector<std::string> cyclic;
      for (const auto& [id, deg] : indegree) {
        if (deg > 0) cyclic.push_back(id);
      }
      add("precedes-cycle", cyclic, "precedes edges form a cycle");
    }
  }

  void decisions() {
    std::vector<std::string> finals;
    for (const auto& n : g_.nodes) {
      if (n.kind != NodeKind::Decision) continue;
      const Value* f = n.attr(vocab::kFinal);
      if (f != nullptr && f->is_bool() && f->as_bool()) finals.push_back(n.node_id);
    }
    if (finals.empty()) add("missing-final-decision", {}, "no Decision node is marked final");
    if (finals.size() > 1) add("multiple-final-decisions", finals, "more than one final Decision node");
    if (finals.size() == 1) {
      const auto action = g_.find_node(finals.front())->attr_string(vocab::kAction);
      if (action && g_.dim(SceneDim::ResolutionAction) != action) {
        add("final-action-mismatch", {finals.front()}, "final action differs from scene_dims.resolution_action");
      }
    }
  }

  void coverage_kinds() {
    const auto count = [&](NodeKind k) {
      return std::count_if(g_.nodes.begin(), g_.nodes.end(), [&](const auto& n) { return n.kind == k; });
    };
    if (count(NodeKind::Entity) == 0) add("missing-entity", {}, "graph needs at least one Entity node");
    if (count(NodeKind::State) == 0) add("missing-state", {}, "graph needs at least one State node");
  }

  const SceneKnowledgeGraph& g_;
  ValidationResult result_;
};

}  // namespace

ValidationResult validate_graph(const SceneKnowledgeGraph& g) { return Checker(g).run(); }

}  // namespace skg

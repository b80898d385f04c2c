#include "skg/rules/generalize.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "skg/core/diff.hpp"
#include "skg/core/serialize.hpp"
#include "skg/core/validate.hpp"
#include "skg/core/vocab.hpp"
#include "skg/error.hpp"
#include "skg/rules/evaluate.hpp"
#include "skg/util/digest.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/rng.hpp"

namespace skg::rules {

namespace {

[[noreturn]] void unsatisfiable(const std::string& why) { throw Error(Errc::UnsatisfiableEdit, why); }

std::vector<const SkgNode*> nodes_where(const SceneKnowledgeGraph& g, NodeKind kind, std::string_view key) {
  std::vector<const SkgNode*> out;
  for (const auto& n : g.nodes) {
    if (n.kind == kind && n.attr(key) != nullptr) out.push_back(&n);
  }
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->node_id < b->node_id; });
  return out;
}

std::vector<const SkgNode*> nodes_of(const SceneKnowledgeGraph& g, NodeKind kind) {
  std::vector<const SkgNode*> out;
  for (const auto& n : g.nodes) {
    if (n.kind == kind) out.push_back(&n);
  }
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->node_id < b->node_id; });
  return out;
}

bool attr_equals(const SkgNode& n, std::string_view key, std::string_view value) {
  const auto v = n.attr_string(key);
  return v && *v == value;
}

std::vector<const SkgEdge*> event_relation_edges(const SceneKnowledgeGraph& g) {
  std::vector<const SkgEdge*> out;
  for (const auto& e : g.edges) {
    if (e.relation != RelationType::Precedes && e.relation != RelationType::OccursDuring) continue;
    const SkgNode* s = g.find_node(e.src);
    const SkgNode* d = g.find_node(e.dst);
    if (s != nullptr && d != nullptr && s->kind == NodeKind::Event && d->kind == NodeKind::Event) out.push_back(&e);
  }
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->edge_id < b->edge_id; });
  return out;
}

std::vector<std::string> minus(const std::vector<std::string>& all, const std::optional<std::string>& current) {
  std::vector<std::string> out;
  for (const auto& v : all) {
    if (!current || v != *current) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void set_decision(EditLog& log, const SkgNode& decision, DecisionAction action) {
  log.push_back(edit::SetAttribute{decision.node_id, std::string(vocab::kAction), Value(to_string(action))});
  log.push_back(edit::SetDim{SceneDim::ResolutionAction, std::string(to_string(action))});
}

// Repairs ------------------------------------------------------------------

// (1) A decision whose rules require sufficient evidence, with none left.
std::optional<EditLog> repair_sufficiency(const SceneKnowledgeGraph& g, const ConstraintSet& c,
                                          const std::vector<Violation>& blocking) {
  const auto action = g.final_action();
  const SkgNode* decision = g.final_decision();
  if (!action || decision == nullptr || *action == DecisionAction::ManualReview) return std::nullopt;
  const auto evidence = nodes_of(g, NodeKind::Evidence);
  if (std::any_of(evidence.begin(), evidence.end(),
                  [](const SkgNode* n) { return attr_equals(*n, vocab::kValidity, "sufficient"); })) {
    return std::nullopt;
  }
  for (const auto& v : blocking) {
    const ConstraintRule* rule = c.find(v.rule_id);
    bool names_action = false;
    for_each_atom(rule->antecedent, [&](const Atom& a, bool negated) {
      const auto* d = std::get_if<DecisionIs>(&a);
      if (d == nullptr || negated || d->cmp == Comparator::Ne) return;
      if (std::find(d->actions.begin(), d->actions.end(), *action) != d->actions.end()) names_action = true;
    });
    bool needs_validity = false;
    for_each_atom(rule->consequent, [&](const Atom& a, bool negated) {
      const auto* n = std::get_if<NodeAttrIs>(&a);
      if (n != nullptr && !negated && n->kind == NodeKind::Evidence && n->key == vocab::kValidity) needs_validity = true;
    });
    if (names_action && needs_validity) {
      EditLog log;
      set_decision(log, *decision, DecisionAction::ManualReview);
      return log;
    }
  }
  return std::nullopt;
}

// (2) Timeline events later than the current service stage.
std::optional<EditLog> repair_timeline(const SceneKnowledgeGraph& g, const std::set<std::string>& strong) {
  const auto stage = g.dim(SceneDim::ServiceStage);
  const auto rank = stage ? vocab::stage_rank(*stage) : std::nullopt;
  if (!rank) return std::nullopt;
  std::set<std::string> doomed;
  for (const auto* n : nodes_of(g, NodeKind::Event)) {
    if (!strong.contains(n->node_id)) continue;
    const auto event_stage = n->attr_string(vocab::kStage);
    const auto event_rank = event_stage ? vocab::stage_rank(*event_stage) : std::nullopt;
    if (event_rank && *event_rank > *rank) doomed.insert(n->node_id);
  }
  if (doomed.empty()) return std::nullopt;
  EditLog log;
  std::vector<std::string> edges;
  for (const auto& e : g.edges) {
    if (doomed.contains(e.src) || doomed.contains(e.dst)) edges.push_back(e.edge_id);
  }
  std::sort(edges.begin(), edges.end());
  for (const auto& id : edges) log.push_back(edit::RemoveEdge{id});
  for (const auto& id : doomed) log.push_back(edit::RemoveNode{id});
  return log;
}

// (3) Decision attribution must follow the responsibility dimension.
std::optional<EditLog> repair_attribution(const SceneKnowledgeGraph& g) {
  const SkgNode* decision = g.final_decision();
  const auto party = g.dim(SceneDim::Responsibility);
  if (decision == nullptr || !party) return std::nullopt;
  std::vector<const SkgEdge*> stale;
  for (const auto& e : g.edges) {
    if (e.src != decision->node_id || e.relation != RelationType::AttributedTo) continue;
    const SkgNode* dst = g.find_node(e.dst);
    if (dst != nullptr && dst->kind == NodeKind::Entity && !attr_equals(*dst, vocab::kRole, *party)) stale.push_back(&e);
  }
  if (stale.empty()) return std::nullopt;
  const SkgNode* target = nullptr;
  for (const auto* n : nodes_of(g, NodeKind::Entity)) {
    if (attr_equals(*n, vocab::kRole, *party)) {
      target = n;
      break;
    }
  }
  if (target == nullptr) unsatisfiable("no entity plays responsible party '" + *party + "'");
  std::sort(stale.begin(), stale.end(), [](auto* a, auto* b) { return a->edge_id < b->edge_id; });
  EditLog log;
  for (const auto* e : stale) {
    SkgEdge moved = *e;
    moved.dst = target->node_id;
    log.push_back(edit::RemoveEdge{e->edge_id});
    log.push_back(edit::AddEdge{std::move(moved)});
  }
  return log;
}

// (4) The decision requires a policy that no longer applies.
std::optional<EditLog> repair_policy(const SceneKnowledgeGraph& g) {
  const SkgNode* decision = g.final_decision();
  const auto action = g.final_action();
  if (decision == nullptr || !action || *action == DecisionAction::Escalate || *action == DecisionAction::Reject) {
    return std::nullopt;
  }
  bool lapsed = false;
  for (const auto& e : g.edges) {
    if (e.src != decision->node_id || e.relation != RelationType::Requires) continue;
    const SkgNode* p = g.find_node(e.dst);
    if (p == nullptr || p->kind != NodeKind::Policy) continue;
    const Value* applies = p->attr(vocab::kApplies);
    if (applies != nullptr && applies->is_bool() && !applies->as_bool()) lapsed = true;
  }
  if (!lapsed) return std::nullopt;
  const auto evidence = nodes_of(g, NodeKind::Evidence);
  const bool contested = std::any_of(evidence.begin(), evidence.end(),
                                     [](const SkgNode* n) { return attr_equals(*n, vocab::kValidity, "contested"); });
  EditLog log;
  set_decision(log, *decision, contested ? DecisionAction::Escalate : DecisionAction::Reject);
  return log;
}

// Fallback: re-derive the decision when a decision rule is still violated.
std::optional<EditLog> rederive_decision(const SceneKnowledgeGraph& g, const ConstraintSet& c,
                                         const std::vector<Violation>& blocking) {
  const SkgNode* decision = g.final_decision();
  const auto current = g.final_action();
  if (decision == nullptr || !current) return std::nullopt;
  ConstraintSet decision_rules;
  for (const auto& r : c.rules) {
    if (r.severity == Severity::Blocking && (mentions_decision(r.antecedent) || mentions_decision(r.consequent))) {
      decision_rules.rules.push_back(r);
    }
  }
  const bool involved = std::any_of(blocking.begin(), blocking.end(),
                                    [&](const Violation& v) { return decision_rules.find(v.rule_id) != nullptr; });
  if (!involved) return std::nullopt;
  static constexpr std::array kOrder{DecisionAction::ManualReview, DecisionAction::Escalate, DecisionAction::Reject,
                                     DecisionAction::Transfer,     DecisionAction::Compensate, DecisionAction::Refund};
  for (auto candidate : kOrder) {
    if (candidate == *current) continue;
    EditLog log;
    set_decision(log, *decision, candidate);
    if (is_consistent(apply_edits(g, log), decision_rules)) return log;
  }
  return std::nullopt;
}

// Canonical equality of everything but identity and provenance.
bool same_content(SceneKnowledgeGraph a, SceneKnowledgeGraph b) {
  const auto by_node = [](const SkgNode& x, const SkgNode& y) { return x.node_id < y.node_id; };
  const auto by_edge = [](const SkgEdge& x, const SkgEdge& y) { return x.edge_id < y.edge_id; };
  std::sort(a.nodes.begin(), a.nodes.end(), by_node);
  std::sort(b.nodes.begin(), b.nodes.end(), by_node);
  std::sort(a.edges.begin(), a.edges.end(), by_edge);
  std::sort(b.edges.begin(), b.edges.end(), by_edge);
  return a.nodes == b.nodes && a.edges == b.edges && a.scene_dims == b.scene_dims;
}

}  // namespace

std::string_view to_string(EditTarget t) noexcept {
  switch (t) {
    case EditTarget::ComplaintType: return "complaint_type";
    case EditTarget::EvidenceQuality: return "evidence_quality";
    case EditTarget::ServiceStage: return "service_stage";
    case EditTarget::Responsibility: return "responsibility";
    case EditTarget::ResolutionAction: return "resolution_action";
    case EditTarget::EvidenceValidity: return "evidence_validity";
    case EditTarget::MerchantResponse: return "merchant_response";
    case EditTarget::EventRelation: return "event_relation";
    case EditTarget::StateVariable: return "state_variable";
  }
  return "?";
}

std::optional<EditTarget> parse_edit_target(std::string_view s) noexcept {
  for (auto t : kAllEditTargets) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::string evidence_summary(const SceneKnowledgeGraph& g) {
  const auto evidence = nodes_of(g, NodeKind::Evidence);
  if (std::any_of(evidence.begin(), evidence.end(),
                  [](const SkgNode* n) { return attr_equals(*n, vocab::kValidity, "contested"); })) {
    return "contested";
  }
  if (!evidence.empty() && std::all_of(evidence.begin(), evidence.end(), [](const SkgNode* n) {
        return attr_equals(*n, vocab::kValidity, "sufficient");
      })) {
    return "sufficient";
  }
  return "insufficient";
}

std::vector<std::string> admissible_values(const SceneKnowledgeGraph& g, EditTarget target) {
  const auto some_differs = [](const std::vector<const SkgNode*>& nodes, std::string_view key,
                               const std::vector<std::string>& values) {
    std::vector<std::string> out;
    for (const auto& v : values) {
      if (std::any_of(nodes.begin(), nodes.end(), [&](const SkgNode* n) { return !attr_equals(*n, key, v); })) {
        out.push_back(v);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  switch (target) {
    case EditTarget::ComplaintType: return minus(vocab::complaint_types(), g.dim(SceneDim::ComplaintType));
    case EditTarget::EvidenceQuality:
      if (nodes_of(g, NodeKind::Evidence).empty()) return {};
      return minus(vocab::validity_values(), g.dim(SceneDim::EvidenceQuality));
    case EditTarget::ServiceStage: return minus(vocab::service_stages(), g.dim(SceneDim::ServiceStage));
    case EditTarget::Responsibility: {
      std::vector<std::string> present;
      for (const auto& p : vocab::parties()) {
        for (const auto* n : nodes_of(g, NodeKind::Entity)) {
          if (attr_equals(*n, vocab::kRole, p)) {
            present.push_back(p);
            break;
          }
        }
      }
      return minus(present, g.dim(SceneDim::Responsibility));
    }
    case EditTarget::ResolutionAction: {
      if (g.final_decision() == nullptr) return {};
      std::vector<std::string> all;
      for (auto a : kAllActions) all.emplace_back(to_string(a));
      return minus(all, g.dim(SceneDim::ResolutionAction));
    }
    case EditTarget::EvidenceValidity:
      return some_differs(nodes_of(g, NodeKind::Evidence), vocab::kValidity, vocab::validity_values());
    case EditTarget::MerchantResponse:
      return some_differs(nodes_where(g, NodeKind::State, vocab::kMerchantResponse), vocab::kMerchantResponse,
                          vocab::merchant_responses());
    case EditTarget::StateVariable:
      return some_differs(nodes_where(g, NodeKind::State, vocab::kOrderStatus), vocab::kOrderStatus,
                          vocab::order_statuses());
    case EditTarget::EventRelation: {
      std::vector<std::string> out;
      const auto edges = event_relation_edges(g);
      for (auto rel : {RelationType::OccursDuring, RelationType::Precedes}) {
        if (std::any_of(edges.begin(), edges.end(), [&](const SkgEdge* e) { return e->relation != rel; })) {
          out.emplace_back(to_string(rel));
        }
      }
      return out;
    }
  }
  return {};
}

EditLog primary_edit(const SceneKnowledgeGraph& g, const EditRequest& req) {
  const auto identical = [&] {
    throw Error(Errc::IdenticalVariant, std::string(to_string(req.target)) + " already has value '" + req.value + "'");
  };
  const auto check_in = [&](const std::vector<std::string>& allowed) {
    if (std::find(allowed.begin(), allowed.end(), req.value) == allowed.end()) {
      unsatisfiable("value '" + req.value + "' is not admissible for " + std::string(to_string(req.target)));
    }
  };
  const auto set_attr_where = [&](EditLog& log, const std::vector<const SkgNode*>& nodes, std::string_view key) {
    for (const auto* n : nodes) {
      if (!attr_equals(*n, key, req.value)) log.push_back(edit::SetAttribute{n->node_id, std::string(key), Value(req.value)});
    }
  };
  const auto dim_edit = [&](SceneDim dim, std::string_view mirrored_key, NodeKind mirrored_kind) {
    if (g.dim(dim) == req.value) identical();
    EditLog log;
    log.push_back(edit::SetDim{dim, req.value});
    set_attr_where(log, nodes_where(g, mirrored_kind, mirrored_key), mirrored_key);
    return log;
  };

  switch (req.target) {
    case EditTarget::ComplaintType: {
      if (req.value.empty()) unsatisfiable("empty complaint type");
      if (g.dim(SceneDim::ComplaintType) == req.value) identical();
      EditLog log{edit::SetDim{SceneDim::ComplaintType, req.value}};
      auto carriers = nodes_where(g, NodeKind::Entity, vocab::kComplaintType);
      const auto states = nodes_where(g, NodeKind::State, vocab::kComplaintType);
      carriers.insert(carriers.end(), states.begin(), states.end());
      std::sort(carriers.begin(), carriers.end(), [](auto* a, auto* b) { return a->node_id < b->node_id; });
      set_attr_where(log, carriers, vocab::kComplaintType);
      return log;
    }
    case EditTarget::EvidenceQuality: {
      check_in(vocab::validity_values());
      const auto evidence = nodes_of(g, NodeKind::Evidence);
      if (evidence.empty()) unsatisfiable("graph has no evidence");
      if (g.dim(SceneDim::EvidenceQuality) == req.value) identical();
      EditLog log{edit::SetDim{SceneDim::EvidenceQuality, req.value}};
      set_attr_where(log, evidence, vocab::kValidity);
      return log;
    }
    case EditTarget::ServiceStage:
      check_in(vocab::service_stages());
      return dim_edit(SceneDim::ServiceStage, vocab::kServiceStage, NodeKind::State);
    case EditTarget::Responsibility: {
      check_in(vocab::parties());
      const auto entities = nodes_of(g, NodeKind::Entity);
      if (std::none_of(entities.begin(), entities.end(),
                       [&](const SkgNode* n) { return attr_equals(*n, vocab::kRole, req.value); })) {
        unsatisfiable("no entity plays party '" + req.value + "'");
      }
      return dim_edit(SceneDim::Responsibility, vocab::kResponsibility, NodeKind::State);
    }
    case EditTarget::ResolutionAction: {
      const auto action = parse_action(req.value);
      if (!action) unsatisfiable("unknown action '" + req.value + "'");
      const SkgNode* decision = g.final_decision();
      if (decision == nullptr) unsatisfiable("graph has no final decision");
      if (g.final_action() == action) identical();
      EditLog log;
      set_decision(log, *decision, *action);
      return log;
    }
    case EditTarget::EvidenceValidity: {
      check_in(vocab::validity_values());
      std::vector<const SkgNode*> candidates;
      for (const auto* n : nodes_of(g, NodeKind::Evidence)) {
        if (!attr_equals(*n, vocab::kValidity, req.value)) candidates.push_back(n);
      }
      if (candidates.empty()) {
        if (nodes_of(g, NodeKind::Evidence).empty()) unsatisfiable("graph has no evidence");
        identical();
      }
      util::Rng rng(req.rng_seed);
      const SkgNode* chosen = candidates[rng.below(candidates.size())];
      EditLog log{edit::SetAttribute{chosen->node_id, std::string(vocab::kValidity), Value(req.value)}};
      const auto summary = evidence_summary(apply_edits(g, log));
      if (g.dim(SceneDim::EvidenceQuality) != summary) log.push_back(edit::SetDim{SceneDim::EvidenceQuality, summary});
      return log;
    }
    case EditTarget::MerchantResponse:
    case EditTarget::StateVariable: {
      const bool merchant = req.target == EditTarget::MerchantResponse;
      const auto key = merchant ? vocab::kMerchantResponse : vocab::kOrderStatus;
      check_in(merchant ? vocab::merchant_responses() : vocab::order_statuses());
      const auto carriers = nodes_where(g, NodeKind::State, key);
      if (carriers.empty()) unsatisfiable("graph has no state carrying " + std::string(key));
      EditLog log;
      set_attr_where(log, carriers, key);
      if (log.empty()) identical();
      return log;
    }
    case EditTarget::EventRelation: {
      const auto relation = parse_relation(req.value);
      if (!relation || (*relation != RelationType::Precedes && *relation != RelationType::OccursDuring)) {
        unsatisfiable("event relation must be precedes or occurs_during");
      }
      const auto edges = event_relation_edges(g);
      std::vector<const SkgEdge*> candidates;
      for (const auto* e : edges) {
        if (e->relation != *relation) candidates.push_back(e);
      }
      if (candidates.empty()) {
        if (edges.empty()) unsatisfiable("graph has no event-to-event relations");
        identical();
      }
      util::Rng rng(req.rng_seed);
      const auto start = rng.below(candidates.size());
      for (std::size_t k = 0; k < candidates.size(); ++k) {
        const SkgEdge* e = candidates[(start + k) % candidates.size()];
        SkgEdge changed = *e;
        changed.relation = *relation;
        EditLog log{edit::RemoveEdge{e->edge_id}, edit::AddEdge{changed}};
        if (!validate_graph(apply_edits(g, log)).has("precedes-cycle")) return log;
      }
      unsatisfiable("every candidate relation change creates a precedes cycle");
    }
  }
  unsatisfiable("unknown edit target");
}

EditLog closure(const SceneKnowledgeGraph& g, const ConstraintSet& c, const EditLog& seed_edit, std::size_t budget) {
  const auto strong = partition_nodes(g).strong;
  EditLog log = seed_edit;
  SceneKnowledgeGraph current = apply_edits(g, seed_edit);
  std::size_t added = 0;

  while (true) {
    std::vector<Violation> blocking;
    for (auto& v : evaluate(current, c)) {
      if (v.severity == Severity::Blocking) blocking.push_back(std::move(v));
    }
    std::optional<EditLog> repair;
    if (!blocking.empty()) repair = repair_sufficiency(current, c, blocking);
    if (!repair) repair = repair_timeline(current, strong);
    if (!repair) repair = repair_attribution(current);
    if (!repair) repair = repair_policy(current);
    if (!repair && !blocking.empty()) repair = rederive_decision(current, c, blocking);

    if (!repair) {
      if (blocking.empty()) return log;
      unsatisfiable("no coordinated repair resolves rule " + blocking.front().rule_id);
    }
    added += repair->size();
    if (added > budget) unsatisfiable("closure exceeds the edit budget of " + std::to_string(budget));
    current = apply_edits(current, *repair);
    log.insert(log.end(), repair->begin(), repair->end());
  }
}

SceneKnowledgeGraph derive_variant(const SceneKnowledgeGraph& parent, const EditLog& log) {
  SceneKnowledgeGraph out = apply_edits(parent, log);
  const auto digest = util::sha256_hex(util::dump_canonical(edit_log_to_json(log)));
  out.graph_id = parent.graph_id + "~" + digest.substr(0, 12);
  out.provenance = GeneralizedProvenance{parent.graph_id, log};
  return out;
}

Variant generalize(const SceneKnowledgeGraph& g, const ConstraintSet& c, const EditRequest& req,
                   const GeneralizeOptions& opts) {
  const EditLog primary = primary_edit(g, req);
  if (!opts.coordinate) return {derive_variant(g, primary), primary, false};

  const EditLog log = closure(g, c, primary);
  Variant v{derive_variant(g, log), log, true};

  // The requested change must survive the coordinated repairs.
  for (const auto& op : primary) {
    bool kept = true;
    if (const auto* s = std::get_if<edit::SetAttribute>(&op)) {
      const SkgNode* n = v.graph.find_node(s->node_id);
      kept = n != nullptr && s->value && n->attr(s->key) != nullptr && *n->attr(s->key) == *s->value;
    } else if (const auto* d = std::get_if<edit::SetDim>(&op)) {
      kept = v.graph.dim(d->dim) == d->value;
    } else if (const auto* a = std::get_if<edit::AddEdge>(&op)) {
      const SkgEdge* e = v.graph.find_edge(a->edge.edge_id);
      kept = e != nullptr && *e == a->edge;
    }
    if (!kept) unsatisfiable("coordinated repairs undo the requested " + std::string(to_string(req.target)));
  }
  if (same_content(v.graph, g)) {
    throw Error(Errc::IdenticalVariant, "variant is canonically equal to its parent");
  }
  if (!validate_graph(v.graph).ok() || !is_consistent(v.graph, c)) {
    unsatisfiable("variant fails validation or consistency");
  }
  return v;
}

std::vector<EditRequest> sample_edits(const SceneKnowledgeGraph& g, std::size_t n, std::uint64_t seed,
                                      std::span<const EditTarget> targets) {
  if (n == 0) throw Error(Errc::InsufficientVariation, "at least one request must be sampled");
  std::map<std::string, std::pair<EditTarget, std::vector<std::string>>> pool;
  std::size_t total = 0;
  for (auto t : targets) {
    auto values = admissible_values(g, t);
    if (values.empty()) continue;
    total += values.size();
    pool[std::string(to_string(t))] = {t, std::move(values)};
  }
  if (total < n) {
    throw Error(Errc::InsufficientVariation,
                "only " + std::to_string(total) + " admissible requests, " + std::to_string(n) + " wanted");
  }
  util::Rng rng(seed);
  std::vector<EditRequest> out;
  while (out.size() < n) {
    auto it = pool.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.below(pool.size())));
    auto& [target, values] = it->second;
    const auto pick = static_cast<std::size_t>(rng.below(values.size()));
    out.push_back({target, values[pick], rng.next()});
    values.erase(values.begin() + static_cast<std::ptrdiff_t>(pick));
    if (values.empty()) pool.erase(it);
  }
  return out;
}

}  // namespace skg::rules

#include "skg/core/types.hpp"

namespace skg {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(std::string_view s, const std::array<Enum, N>& all) noexcept {
  for (Enum e : all) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(NodeKind k) noexcept {
  switch (k) {
    case NodeKind::Entity: return "Entity";
    case NodeKind::Evidence: return "Evidence";
    case NodeKind::Event: return "Event";
    case NodeKind::State: return "State";
    case NodeKind::Policy: return "Policy";
    case NodeKind::Decision: return "Decision";
  }
  return "?";
}

std::string_view to_string(CouplingClass c) noexcept { return c == CouplingClass::Strong ? "strong" : "weak"; }

std::string_view to_string(RelationType r) noexcept {
  switch (r) {
    case RelationType::Supports: return "supports";
    case RelationType::Contradicts: return "contradicts";
    case RelationType::Precedes: return "precedes";
    case RelationType::OccursDuring: return "occurs_during";
    case RelationType::AttributedTo: return "attributed_to";
    case RelationType::AppliesTo: return "applies_to";
    case RelationType::Requires: return "requires";
    case RelationType::RefersTo: return "refers_to";
    case RelationType::ResultsIn: return "results_in";
    case RelationType::NegotiatedIn: return "negotiated_in";
  }
  return "?";
}

std::string_view to_string(DecisionAction a) noexcept {
  switch (a) {
    case DecisionAction::Refund: return "Refund";
    case DecisionAction::Compensate: return "Compensate";
    case DecisionAction::Transfer: return "Transfer";
    case DecisionAction::Escalate: return "Escalate";
    case DecisionAction::Reject: return "Reject";
    case DecisionAction::ManualReview: return "ManualReview";
  }
  return "?";
}

std::string_view to_string(SceneDim d) noexcept {
  switch (d) {
    case SceneDim::ComplaintType: return "complaint_type";
    case SceneDim::EvidenceQuality: return "evidence_quality";
    case SceneDim::ServiceStage: return "service_stage";
    case SceneDim::Responsibility: return "responsibility";
    case SceneDim::ResolutionAction: return "resolution_action";
  }
  return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) noexcept { return lookup(s, kAllNodeKinds); }

std::optional<CouplingClass> parse_coupling(std::string_view s) noexcept {
  if (s == "strong") return CouplingClass::Strong;
  if (s == "weak") return CouplingClass::Weak;
  return std::nullopt;
}

std::optional<RelationType> parse_relation(std::string_view s) noexcept { return lookup(s, kAllRelations); }
std::optional<DecisionAction> parse_action(std::string_view s) noexcept { return lookup(s, kAllActions); }
std::optional<SceneDim> parse_scene_dim(std::string_view s) noexcept { return lookup(s, kAllSceneDims); }

}  // namespace skg

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace skg {

enum class NodeKind { Entity, Evidence, Event, State, Policy, Decision };
enum class CouplingClass { Strong, Weak };
enum class RelationType {
  Supports,
  Contradicts,
  Precedes,
  OccursDuring,
  AttributedTo,
  AppliesTo,
  Requires,
  RefersTo,
  ResultsIn,
  NegotiatedIn,
};
enum class DecisionAction { Refund, Compensate, Transfer, Escalate, Reject, ManualReview };
enum class SceneDim { ComplaintType, EvidenceQuality, ServiceStage, Responsibility, ResolutionAction };

inline constexpr std::array kAllNodeKinds{NodeKind::Entity, NodeKind::Evidence, NodeKind::Event,
                                          NodeKind::State,  NodeKind::Policy,   NodeKind::Decision};
inline constexpr std::array kAllRelations{
    RelationType::Supports,     RelationType::Contradicts, RelationType::Precedes, RelationType::OccursDuring,
    RelationType::AttributedTo, RelationType::AppliesTo,   RelationType::Requires, RelationType::RefersTo,
    RelationType::ResultsIn,    RelationType::NegotiatedIn};
inline constexpr std::array kAllActions{DecisionAction::Refund,   DecisionAction::Compensate,
                                        DecisionAction::Transfer, DecisionAction::Escalate,
                                        DecisionAction::Reject,   DecisionAction::ManualReview};
inline constexpr std::array kAllSceneDims{SceneDim::ComplaintType, SceneDim::EvidenceQuality,
                                          SceneDim::ServiceStage, SceneDim::Responsibility,
                                          SceneDim::ResolutionAction};

// Wire names: node kinds and actions are PascalCase, relations and scene
// dimensions snake_case, coupling lowercase.
std::string_view to_string(NodeKind k) noexcept;
std::string_view to_string(CouplingClass c) noexcept;
std::string_view to_string(RelationType r) noexcept;
std::string_view to_string(DecisionAction a) noexcept;
std::string_view to_string(SceneDim d) noexcept;

std::optional<NodeKind> parse_node_kind(std::string_view s) noexcept;
std::optional<CouplingClass> parse_coupling(std::string_view s) noexcept;
std::optional<RelationType> parse_relation(std::string_view s) noexcept;
std::optional<DecisionAction> parse_action(std::string_view s) noexcept;
std::optional<SceneDim> parse_scene_dim(std::string_view s) noexcept;

}  // namespace skg

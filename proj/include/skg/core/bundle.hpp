#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/core/graph.hpp"

namespace skg {

enum class Subtask { Evidence, Policy, Action, Routing, Responsibility, Resolution };

inline constexpr std::array kAllSubtasks{Subtask::Evidence, Subtask::Policy,         Subtask::Action,
                                         Subtask::Routing,  Subtask::Responsibility, Subtask::Resolution};
inline constexpr std::array kTextSubtasks{Subtask::Evidence, Subtask::Policy, Subtask::Action};
inline constexpr std::array kMmSubtasks{Subtask::Routing, Subtask::Responsibility, Subtask::Resolution};

std::string_view to_string(Subtask s) noexcept;
std::optional<Subtask> parse_subtask(std::string_view s) noexcept;
/// Evidence and policy questions are yes/no style with exactly two options.
bool is_binary(Subtask s) noexcept;

struct QAOption {
  std::string label;  // "A".."E"
  std::string text;
  friend bool operator==(const QAOption&, const QAOption&) = default;
};

struct QAItem {
  std::string qa_id;
  std::string graph_id;
  Subtask subtask = Subtask::Action;
  std::string question;
  std::vector<QAOption> options;
  std::size_t gold_index = 0;

  const QAOption& gold() const { return options.at(gold_index); }
  friend bool operator==(const QAItem&, const QAItem&) = default;
};

/// Invariant breaches: option count, duplicate option texts, gold range.
std::vector<std::string> validate_qa(const QAItem& q);

nlohmann::json qa_to_json(const QAItem& q);
/// Strict: SchemaError on unknown fields or any validate_qa breach.
QAItem qa_from_json(const nlohmann::json& j, const std::string& path = "");

using Span = std::pair<std::size_t, std::size_t>;  // [begin, end) byte offsets

struct SceneDescription {
  std::string graph_id;
  std::string text;
  std::map<std::string, Span> coverage;

  friend bool operator==(const SceneDescription&, const SceneDescription&) = default;
};

nlohmann::json description_to_json(const SceneDescription& d);
/// Strict; spans must lie within the text.
SceneDescription description_from_json(const nlohmann::json& j, const std::string& path = "");

/// One iteration's (graph, description, QA) triple. The graph is absent only
/// in plain-text runs.
struct GenerationBundle {
  std::size_t iteration = 0;
  std::optional<SceneKnowledgeGraph> graph;
  SceneDescription description;
  std::vector<QAItem> qa;
};

/// Payload layout {graph?, description, qa}; the iteration is not part of it.
nlohmann::json bundle_payload_to_json(const GenerationBundle& b);
/// Strict schema check of a payload object. The graph is schema-checked only;
/// callers run structural validation. Mismatched graph ids are SchemaErrors.
GenerationBundle bundle_payload_from_json(const nlohmann::json& j, std::size_t iteration, bool graph_required,
                                          const std::string& path = "");

}  // namespace skg

#pragma once

#include <cstdint>

#include "skg/core/bundle.hpp"
#include "skg/core/graph.hpp"

namespace skg::corpus {

/// Deterministic structured description in fixed section order: complaint
/// type, evidence status, timeline, transactional state, policy cues,
/// candidate actions. Every node is covered by the span of its line.
SceneDescription render_scene_description(const SceneKnowledgeGraph& g);

/// Builds one question about the graph. Gold comes from the graph; distractors
/// and option order are drawn from rng_seed. Throws MissingAttribute when the
/// graph lacks what the subtask asks about.
QAItem build_qa(const SceneKnowledgeGraph& g, Subtask subtask, std::uint64_t rng_seed);

/// Gold answer text build_qa would embed, without building the question.
std::string gold_answer(const SceneKnowledgeGraph& g, Subtask subtask);

}  // namespace skg::corpus

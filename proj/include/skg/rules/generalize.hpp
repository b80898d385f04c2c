#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skg/core/graph.hpp"
#include "skg/rules/ast.hpp"

namespace skg::rules {

// What a generalization request edits: one of the five scene dimensions or a
// finer-grained graph variable.
enum class EditTarget {
  ComplaintType,
  EvidenceQuality,
  ServiceStage,
  Responsibility,
  ResolutionAction,
  EvidenceValidity,
  MerchantResponse,
  EventRelation,
  StateVariable,
};

inline constexpr std::array kAllEditTargets{
    EditTarget::ComplaintType,    EditTarget::EvidenceQuality,  EditTarget::ServiceStage,
    EditTarget::Responsibility,   EditTarget::ResolutionAction, EditTarget::EvidenceValidity,
    EditTarget::MerchantResponse, EditTarget::EventRelation,    EditTarget::StateVariable};

std::string_view to_string(EditTarget t) noexcept;
std::optional<EditTarget> parse_edit_target(std::string_view s) noexcept;

struct EditRequest {
  EditTarget target = EditTarget::ServiceStage;
  std::string value;
  std::uint64_t rng_seed = 0;

  friend bool operator==(const EditRequest&, const EditRequest&) = default;
};

inline constexpr std::size_t kClosureBudget = 12;
/// Requests drawn per base case by default (about 7.8 graphs per base in practice).
inline constexpr std::size_t kDefaultVariantsPerCase = 8;

/// Values the target can take on this graph, excluding its current value.
/// Empty when the graph has nothing to edit for the target.
std::vector<std::string> admissible_values(const SceneKnowledgeGraph& g, EditTarget target);

/// The request's own edits, before any coordinated follow-up. Throws
/// IdenticalVariant when the target already has the value and
/// UnsatisfiableEdit when the graph has nothing to edit.
EditLog primary_edit(const SceneKnowledgeGraph& g, const EditRequest& req);

/// Extends seed_edit with the coordinated repairs that make the result
/// consistent: (1) insufficient evidence under a sufficiency-requiring
/// decision -> ManualReview; (2) timeline events later than the service stage
/// are removed; (3) decision attributed_to edges follow the responsibility
/// dimension; (4) a required policy that no longer applies -> Escalate with
/// contested evidence, else Reject; then a decision re-derivation fallback.
/// Only strongly coupled nodes are touched. Throws UnsatisfiableEdit past
/// `budget` added edits or when no repair applies.
EditLog closure(const SceneKnowledgeGraph& g, const ConstraintSet& c, const EditLog& seed_edit,
                std::size_t budget = kClosureBudget);

/// Applies an edit log to a parent and stamps the variant's id and
/// Generalized provenance. Replay of a generalize result's log reproduces it.
SceneKnowledgeGraph derive_variant(const SceneKnowledgeGraph& parent, const EditLog& log);

struct Variant {
  SceneKnowledgeGraph graph;
  EditLog edit_log;
  bool coordinated = true;
};

struct GeneralizeOptions {
  /// false: primary edit only, no closure and no consistency gate (the
  /// "without strong/weak partition" ablation).
  bool coordinate = true;
};

/// Rule-consistent variant of g differing in the requested target.
Variant generalize(const SceneKnowledgeGraph& g, const ConstraintSet& c, const EditRequest& req,
                   const GeneralizeOptions& opts = {});

/// n distinct requests: a target uniformly among editable targets, then a
/// value uniformly among its admissible values (both in lexicographic order),
/// without replacement. Throws InsufficientVariation when fewer than n exist.
std::vector<EditRequest> sample_edits(const SceneKnowledgeGraph& g, std::size_t n, std::uint64_t seed,
                                      std::span<const EditTarget> targets = kAllEditTargets);

/// Evidence summary used for evidence_quality: contested if any evidence is
/// contested, sufficient if all are, otherwise insufficient.
std::string evidence_summary(const SceneKnowledgeGraph& g);

}  // namespace skg::rules

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/core/value.hpp"

namespace skg {

enum class EvidenceMedium { Screenshot, Photo, Document, ChatExport };
enum class Actor { User, Agent, Merchant, System };

std::string_view to_string(EvidenceMedium m) noexcept;
std::string_view to_string(Actor a) noexcept;

struct EvidenceAsset {
  std::string asset_id;
  EvidenceMedium medium = EvidenceMedium::Screenshot;
  std::string uri;
  std::optional<std::string> extracted_text;
  std::optional<Timestamp> captured_at;
  std::string integrity_hash;

  friend bool operator==(const EvidenceAsset&, const EvidenceAsset&) = default;
};

struct InteractionRecord {
  Timestamp timestamp;
  Actor actor = Actor::User;
  std::string text;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

struct PolicyClause {
  std::string clause_id;
  std::string title;
  std::string body;

  friend bool operator==(const PolicyClause&, const PolicyClause&) = default;
};

/// The five-part evidence tuple of one complaint: narrative, evidence assets,
/// metadata, interaction history and the policy clauses in force.
struct ComplaintCase {
  std::string case_id;
  std::string narrative;
  std::vector<EvidenceAsset> evidence_assets;
  AttrMap metadata;
  std::vector<InteractionRecord> history;
  std::vector<PolicyClause> policy_clauses;

  const EvidenceAsset* find_asset(std::string_view asset_id) const;
  /// Start of the case's timeline: metadata `created_at` when present, else the
  /// earliest history timestamp.
  std::optional<Timestamp> opened_at() const;

  friend bool operator==(const ComplaintCase&, const ComplaintCase&) = default;
};

/// Invariant breaches of a case (empty id, non-monotone history, ...).
std::vector<std::string> validate_case(const ComplaintCase& c);

nlohmann::json case_to_json(const ComplaintCase& c);
ComplaintCase case_from_json(const nlohmann::json& j, const std::string& path = "");

/// Canonical `.case` document (sorted keys, compact).
std::string canonicalize_case(const ComplaintCase& c);
ComplaintCase parse_case(std::string_view bytes);

}  // namespace skg

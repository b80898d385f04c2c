#include "skg/core/case.hpp"

#include <algorithm>
#include <set>

#include "skg/error.hpp"
#include "skg/util/json_reader.hpp"

namespace skg {

namespace {

constexpr std::array kMedia{EvidenceMedium::Screenshot, EvidenceMedium::Photo, EvidenceMedium::Document,
                            EvidenceMedium::ChatExport};
constexpr std::array kActors{Actor::User, Actor::Agent, Actor::Merchant, Actor::System};

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& s, const std::array<Enum, N>& all, const std::string& path) {
  for (Enum e : all) {
    if (to_string(e) == s) return e;
  }
  util::schema_error(path, "unknown value '" + s + "'");
}

Timestamp parse_ts(const std::string& s, const std::string& path) {
  const auto t = Timestamp::parse(s);
  if (!t) util::schema_error(path, "malformed timestamp");
  return *t;
}

}  // namespace

std::string_view to_string(EvidenceMedium m) noexcept {
  switch (m) {
    case EvidenceMedium::Screenshot: return "screenshot";
    case EvidenceMedium::Photo: return "photo";
    case EvidenceMedium::Document: return "document";
    case EvidenceMedium::ChatExport: return "chat_export";
  }
  return "?";
}

std::string_view to_string(Actor a) noexcept {
  switch (a) {
    case Actor::User: return "user";
    case Actor::Agent: return "agent";
    case Actor::Merchant: return "merchant";
    case Actor::System: return "system";
  }
  return "?";
}

const EvidenceAsset* ComplaintCase::find_asset(std::string_view asset_id) const {
  const auto it = std::find_if(evidence_assets.begin(), evidence_assets.end(),
                               [&](const EvidenceAsset& a) { return a.asset_id == asset_id; });
  return it == evidence_assets.end() ? nullptr : &*it;
}

std::optional<Timestamp> ComplaintCase::opened_at() const {
  if (const auto it = metadata.find("created_at"); it != metadata.end() && it->second.is_timestamp()) {
    return it->second.as_timestamp();
  }
  if (history.empty()) return std::nullopt;
  return std::min_element(history.begin(), history.end(),
                          [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; })
      ->timestamp;
}

std::vector<std::string> validate_case(const ComplaintCase& c) {
  std::vector<std::string> issues;
  if (c.case_id.empty()) issues.emplace_back("empty case_id");
  std::set<std::string> asset_ids;
  for (const auto& a : c.evidence_assets) {
    if (a.asset_id.empty()) issues.emplace_back("asset with empty asset_id");
    if (!asset_ids.insert(a.asset_id).second) issues.push_back("duplicate asset_id " + a.asset_id);
  }
  for (std::size_t i = 1; i < c.history.size(); ++i) {
    if (c.history[i].timestamp < c.history[i - 1].timestamp) {
      issues.push_back("history timestamps decrease at index " + std::to_string(i));
    }
  }
  for (const auto& p : c.policy_clauses) {
    if (p.clause_id.empty() || p.body.empty()) issues.push_back("policy clause missing id or body");
  }
  return issues;
}

nlohmann::json case_to_json(const ComplaintCase& c) {
  auto assets = nlohmann::json::array();
  for (const auto& a : c.evidence_assets) {
    nlohmann::json j{{"asset_id", a.asset_id},
                     {"medium", to_string(a.medium)},
                     {"uri", a.uri},
                     {"integrity_hash", a.integrity_hash}};
    if (a.extracted_text) j["extracted_text"] = *a.extracted_text;
    if (a.captured_at) j["captured_at"] = a.captured_at->to_string();
    assets.push_back(std::move(j));
  }
  auto history = nlohmann::json::array();
  for (const auto& h : c.history) {
    history.push_back({{"timestamp", h.timestamp.to_string()}, {"actor", to_string(h.actor)}, {"text", h.text}});
  }
  auto clauses = nlohmann::json::array();
  for (const auto& p : c.policy_clauses) {
    clauses.push_back({{"clause_id", p.clause_id}, {"title", p.title}, {"body", p.body}});
  }
  return {{"schema_version", "1"},       {"case_id", c.case_id}, {"narrative", c.narrative},
          {"evidence_assets", assets},   {"metadata", attrs_to_json(c.metadata)},
          {"history", history},          {"policy_clauses", clauses}};
}

ComplaintCase case_from_json(const nlohmann::json& j, const std::string& path) {
  util::ObjectReader r(j, path);
  if (const auto version = r.opt_string("schema_version"); version && *version != "1") {
    throw Error(Errc::VersionError, "unsupported case schema_version " + *version);
  }
  ComplaintCase c;
  c.case_id = r.nonempty("case_id");
  c.narrative = r.string("narrative");
  const auto& assets = r.array("evidence_assets");
  for (std::size_t i = 0; i < assets.size(); ++i) {
    const auto p = r.child("evidence_assets") + "/" + std::to_string(i);
    util::ObjectReader ar(assets[i], p);
    EvidenceAsset a;
    a.asset_id = ar.nonempty("asset_id");
    a.medium = parse_enum(ar.string("medium"), kMedia, ar.child("medium"));
    a.uri = ar.string("uri");
    a.integrity_hash = ar.string("integrity_hash");
    a.extracted_text = ar.opt_string("extracted_text");
    if (auto t = ar.opt_string("captured_at")) a.captured_at = parse_ts(*t, ar.child("captured_at"));
    ar.finish();
    c.evidence_assets.push_back(std::move(a));
  }
  c.metadata = attrs_from_json(r.object("metadata"), r.child("metadata"));
  const auto& history = r.array("history");
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto p = r.child("history") + "/" + std::to_string(i);
    util::ObjectReader hr(history[i], p);
    InteractionRecord h;
    h.timestamp = parse_ts(hr.string("timestamp"), hr.child("timestamp"));
    h.actor = parse_enum(hr.string("actor"), kActors, hr.child("actor"));
    h.text = hr.string("text");
    hr.finish();
    c.history.push_back(std::move(h));
  }
  const auto& clauses = r.array("policy_clauses");
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    util::ObjectReader pr(clauses[i], r.child("policy_clauses") + "/" + std::to_string(i));
    PolicyClause p;
    p.clause_id = pr.nonempty("clause_id");
    p.title = pr.string("title");
    p.body = pr.nonempty("body");
    pr.finish();
    c.policy_clauses.push_back(std::move(p));
  }
  r.finish();
  if (const auto issues = validate_case(c); !issues.empty()) {
    throw Error(Errc::SchemaError, "invalid case: " + issues.front(), {{"issues", issues}});
  }
  return c;
}

std::string canonicalize_case(const ComplaintCase& c) { return util::dump_canonical(case_to_json(c)); }

ComplaintCase parse_case(std::string_view bytes) { return case_from_json(util::parse_json(bytes)); }

}  // namespace skg

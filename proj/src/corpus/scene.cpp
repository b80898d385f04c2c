#include "skg/corpus/scene.hpp"

#include <algorithm>
#include <array>

#include "skg/core/validate.hpp"
#include "skg/core/vocab.hpp"
#include "skg/error.hpp"
#include "skg/util/digest.hpp"
#include "skg/util/rng.hpp"

namespace skg::corpus {

namespace {

constexpr std::int64_t kHour = 3600;
constexpr std::int64_t kDay = 24 * kHour;
constexpr std::int64_t kEpoch2024 = 1704067200;

struct Lifecycle {
  const char* id;
  const char* label;
  const char* stage;
  std::int64_t offset;
};

constexpr std::array kLifecycle{
    Lifecycle{"evt-placed", "Order placed", "pre_delivery", 0},
    Lifecycle{"evt-paid", "Payment captured", "pre_delivery", kHour},
    Lifecycle{"evt-shipped", "Parcel handed to carrier", "in_transit", kDay},
    Lifecycle{"evt-delivered", "Delivery confirmed", "post_delivery", 3 * kDay},
    Lifecycle{"evt-returned", "Item returned", "after_sales", 6 * kDay},
};

std::size_t lifecycle_length(const std::string& status) {
  if (status == "placed") return 1;
  if (status == "paid" || status == "cancelled") return 2;
  if (status == "shipped") return 3;
  if (status == "delivered") return 4;
  return 5;
}

// Statuses and complaint types that fit each service stage.
struct StageProfile {
  const char* stage;
  std::vector<std::string> statuses;
  std::vector<std::string> types;
};

const std::vector<StageProfile>& profiles() {
  static const std::vector<StageProfile> p{
      {"pre_delivery", {"placed", "paid", "cancelled"}, {"billing_error", "service_quality"}},
      {"in_transit", {"shipped"}, {"billing_error", "late_delivery", "non_delivery", "service_quality"}},
      {"post_delivery",
       {"delivered"},
       {"billing_error", "damaged_item", "late_delivery", "non_delivery", "service_quality", "wrong_item"}},
      {"after_sales", {"delivered", "returned"}, {"damaged_item", "refund_delay", "service_quality", "wrong_item"}},
  };
  return p;
}

const std::string& pick(util::Rng& rng, const std::vector<std::string>& values) {
  return values[rng.below(values.size())];
}

std::string meta_string(const ComplaintCase& c, const std::string& key) {
  const auto it = c.metadata.find(key);
  if (it == c.metadata.end() || !it->second.is_string()) {
    throw Error(Errc::MissingAttribute, "case " + c.case_id + " lacks scene field '" + key + "'",
                {{"case_id", c.case_id}, {"field", key}});
  }
  return it->second.as_string();
}

bool meta_bool(const ComplaintCase& c, const std::string& key) {
  const auto it = c.metadata.find(key);
  if (it == c.metadata.end() || !it->second.is_bool()) {
    throw Error(Errc::MissingAttribute, "case " + c.case_id + " lacks scene field '" + key + "'",
                {{"case_id", c.case_id}, {"field", key}});
  }
  return it->second.as_bool();
}

std::string humanize(std::string s) {
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

const char* party_label(const std::string& role) {
  if (role == "user") return "Customer";
  if (role == "merchant") return "Merchant";
  if (role == "carrier") return "Carrier";
  return "Marketplace platform";
}

}  // namespace

ComplaintCase synthetic_case(std::uint64_t index, std::uint64_t seed) {
  util::Rng rng = util::Rng::keyed("case:" + std::to_string(index), seed);
  ComplaintCase c;

  const auto& profile = profiles()[rng.below(profiles().size())];
  const std::string stage = profile.stage;
  const std::string status = pick(rng, profile.statuses);
  const std::string type = pick(rng, profile.types);
  static const std::vector<std::string> kParties{"merchant", "merchant", "merchant", "carrier", "platform", "user"};
  std::string party = pick(rng, kParties);
  if (party == "carrier" && lifecycle_length(status) < 3) party = "merchant";
  static const std::vector<std::string> kQuality{"sufficient", "sufficient", "sufficient", "insufficient",
                                                 "contested"};
  const std::string quality = pick(rng, kQuality);
  const std::string response = pick(rng, vocab::merchant_responses());
  const bool applies = rng.below(6) != 0;

  const Timestamp opened{kEpoch2024 + static_cast<std::int64_t>(rng.below(600)) * kDay +
                         static_cast<std::int64_t>(rng.below(24)) * kHour};
  const std::string order_no = "ORD-" + std::to_string(100000 + rng.below(900000));

  static const std::array kMedia{EvidenceMedium::Photo, EvidenceMedium::Screenshot, EvidenceMedium::Document,
                                 EvidenceMedium::ChatExport};
  const std::size_t n_assets = 1 + rng.below(4);
  for (std::size_t i = 0; i < n_assets; ++i) {
    EvidenceAsset a;
    a.medium = kMedia[rng.below(kMedia.size())];
    a.asset_id = "a" + std::to_string(i + 1) + "-" + std::string(to_string(a.medium));
    a.extracted_text = humanize(std::string(to_string(a.medium))) + " for " + order_no + " showing " + humanize(type);
    a.integrity_hash = util::sha256_hex("asset|" + std::to_string(seed) + "|" + std::to_string(index) + "|" + a.asset_id);
    a.uri = "assets/" + a.integrity_hash;
    a.captured_at = Timestamp{opened.seconds + 4 * kDay + static_cast<std::int64_t>(i) * kHour};
    c.evidence_assets.push_back(std::move(a));
  }

  c.metadata["created_at"] = Value(opened);
  c.metadata["order_id"] = Value(order_no);
  c.metadata["order_total"] = Value(Decimal(static_cast<std::int64_t>(500 + rng.below(50000)), 2));
  c.metadata["complaint_type"] = Value(type);
  c.metadata["order_status"] = Value(status);
  c.metadata["service_stage"] = Value(stage);
  c.metadata["responsibility"] = Value(party);
  c.metadata["merchant_response"] = Value(response);
  c.metadata["evidence_quality"] = Value(quality);
  c.metadata["policy_applies"] = Value(applies);
  c.metadata["primary_asset"] = Value(c.evidence_assets.front().asset_id);

  c.policy_clauses.push_back({"P-" + type, "Handling of " + humanize(type) + " complaints",
                              "Complaints about " + humanize(type) +
                                  " are resolved after the responsible party is identified and the evidence is "
                                  "reviewed."});
  if (rng.below(2) == 0) {
    c.policy_clauses.push_back({"P-general", "General service terms",
                                "The platform mediates disputes between customers, merchants and carriers."});
  }

  const auto complaint_at = opened.seconds + static_cast<std::int64_t>(lifecycle_length(status)) * 2 * kDay;
  const std::size_t n_history = 2 + rng.below(5);
  static const std::array kActors{Actor::User, Actor::Agent, Actor::Merchant, Actor::System};
  for (std::size_t i = 0; i < n_history; ++i) {
    const Actor actor = i == 0 ? Actor::User : kActors[rng.below(kActors.size())];
    std::string text = i == 0 ? "Opened a complaint about " + humanize(type) + " on " + order_no + "."
                              : std::string(to_string(actor)) + " follow-up " + std::to_string(i) + ".";
    c.history.push_back({Timestamp{complaint_at + static_cast<std::int64_t>(i) * 5 * kHour}, actor, std::move(text)});
  }

  c.narrative = "I ordered " + order_no + " and the order is now " + status + ". My complaint is about " +
                humanize(type) + ". The merchant response so far: " + humanize(response) + ".";
  // Content-derived id keeps regeneration idempotent.
  c.case_id = "syn-" + util::sha256_hex(std::to_string(seed) + "|" + std::to_string(index) + "|" + c.narrative)
                           .substr(0, 12);
  return c;
}

DecisionAction derive_action(const ComplaintCase& c) {
  const auto quality = meta_string(c, "evidence_quality");
  const auto party = meta_string(c, "responsibility");
  const auto type = meta_string(c, "complaint_type");
  const auto stage = meta_string(c, "service_stage");
  if (quality == "contested") return DecisionAction::Escalate;
  if (quality == "insufficient") return DecisionAction::ManualReview;
  if (!meta_bool(c, "policy_applies")) return DecisionAction::Reject;
  if (party == "carrier" || party == "platform") return DecisionAction::Transfer;
  if (party == "user") return DecisionAction::Reject;
  if (type == "late_delivery" || type == "service_quality") return DecisionAction::Compensate;
  const bool delivered = stage == "post_delivery" || stage == "after_sales";
  if (delivered || type == "billing_error" || type == "non_delivery") return DecisionAction::Refund;
  return DecisionAction::ManualReview;
}

SceneKnowledgeGraph scene_from_case(const ComplaintCase& c) {
  const auto type = meta_string(c, "complaint_type");
  const auto status = meta_string(c, "order_status");
  const auto stage = meta_string(c, "service_stage");
  const auto party = meta_string(c, "responsibility");
  const auto response = meta_string(c, "merchant_response");
  const auto quality = meta_string(c, "evidence_quality");
  const bool applies = meta_bool(c, "policy_applies");
  const auto action = derive_action(c);
  const auto opened = c.opened_at().value_or(Timestamp{kEpoch2024});

  SceneKnowledgeGraph g;
  g.graph_id = "g-" + c.case_id;
  g.base_case_id = c.case_id;
  g.scene_dims = {{SceneDim::ComplaintType, type},
                  {SceneDim::EvidenceQuality, quality},
                  {SceneDim::ServiceStage, stage},
                  {SceneDim::Responsibility, party},
                  {SceneDim::ResolutionAction, std::string(to_string(action))}};

  const auto node = [&](std::string id, NodeKind kind, std::string label, AttrMap attrs) {
    g.nodes.push_back({std::move(id), kind, std::move(label), std::move(attrs), CouplingClass::Weak});
  };
  const auto edge = [&](std::string id, std::string src, std::string dst, RelationType rel) {
    g.edges.push_back({std::move(id), std::move(src), std::move(dst), rel, {}});
  };

  std::vector<std::string> roles{"user", "merchant", "platform"};
  if (lifecycle_length(status) >= 3 || party == "carrier") roles.emplace_back("carrier");
  for (const auto& role : roles) node("ent-" + role, NodeKind::Entity, party_label(role), {{"role", Value(role)}});
  node("ent-tone", NodeKind::Entity, "Tone of the exchange", {{"stylistic_note", Value("polite but firm")}});

  node("st-order", NodeKind::State, "Order status",
       {{"order_status", Value(status)}, {"merchant_response", Value(response)}});
  node("st-service", NodeKind::State, "Complaint handling",
       {{"service_stage", Value(stage)}, {"responsibility", Value(party)}, {"complaint_type", Value(type)}});
  edge("x-order-user", "st-order", "ent-user", RelationType::RefersTo);
  edge("x-order-merchant", "st-order", "ent-merchant", RelationType::RefersTo);
  edge("x-service-order", "st-service", "st-order", RelationType::RefersTo);

  const std::size_t steps = lifecycle_length(status);
  std::string previous;
  for (std::size_t i = 0; i < steps; ++i) {
    const auto& step = kLifecycle[i];
    node(step.id, NodeKind::Event, step.label,
         {{"stage", Value(step.stage)}, {"timestamp", Value(Timestamp{opened.seconds + step.offset})}});
    if (!previous.empty()) edge("t-" + previous.substr(4) + "-" + std::string(step.id).substr(4), previous, step.id, RelationType::Precedes);
    previous = step.id;
  }
  if (status == "cancelled") {
    node("evt-cancelled", NodeKind::Event, "Order cancelled",
         {{"stage", Value("pre_delivery")}, {"timestamp", Value(Timestamp{opened.seconds + 2 * kHour})}});
    edge("t-" + previous.substr(4) + "-cancelled", previous, "evt-cancelled", RelationType::Precedes);
    previous = "evt-cancelled";
  }
  const Timestamp complaint_at = c.history.empty() ? Timestamp{opened.seconds + 8 * kDay} : c.history.front().timestamp;
  node("evt-complaint", NodeKind::Event, "Complaint filed", {{"timestamp", Value(complaint_at)}});
  edge("t-" + previous.substr(4) + "-complaint", previous, "evt-complaint", RelationType::Precedes);
  node("evt-chat", NodeKind::Event, "Support conversation", {{"timestamp", Value(complaint_at)}});
  edge("x-chat-complaint", "evt-chat", "evt-complaint", RelationType::OccursDuring);
  edge("x-chat-user", "evt-chat", "ent-user", RelationType::NegotiatedIn);

  for (const auto& a : c.evidence_assets) {
    const auto id = "ev-" + a.asset_id;
    node(id, NodeKind::Evidence, a.asset_id, {{"validity", Value(quality)}, {"medium", Value(to_string(a.medium))}});
    edge("s-" + a.asset_id, id, "evt-complaint",
         quality == "contested" ? RelationType::Contradicts : RelationType::Supports);
  }

  for (std::size_t i = 0; i < c.policy_clauses.size(); ++i) {
    const auto& p = c.policy_clauses[i];
    const auto id = "pol-" + p.clause_id;
    node(id, NodeKind::Policy, p.title, {{"clause_id", Value(p.clause_id)}, {"applies", Value(i == 0 ? applies : true)}});
    edge("p-" + p.clause_id + "-service", id, "st-service", RelationType::AppliesTo);
  }

  node("dec-final", NodeKind::Decision, "Recommended resolution",
       {{"action", Value(to_string(action))}, {"final", Value(true)}});
  edge("d-complaint", "evt-complaint", "dec-final", RelationType::ResultsIn);
  edge("d-party", "dec-final", "ent-" + party, RelationType::AttributedTo);
  if (!c.policy_clauses.empty()) edge("d-policy", "dec-final", "pol-" + c.policy_clauses.front().clause_id, RelationType::Requires);

  stamp_couplings(g);
  std::sort(g.nodes.begin(), g.nodes.end(), [](const auto& a, const auto& b) { return a.node_id < b.node_id; });
  std::sort(g.edges.begin(), g.edges.end(), [](const auto& a, const auto& b) { return a.edge_id < b.edge_id; });
  return g;
}

}  // namespace skg::corpus

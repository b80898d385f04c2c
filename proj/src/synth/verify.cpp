#include "skg/synth/verify.hpp"

#include <algorithm>
#include <set>

#include "skg/core/validate.hpp"
#include "skg/core/vocab.hpp"
#include "skg/corpus/describe.hpp"
#include "skg/error.hpp"
#include "skg/rules/evaluate.hpp"
#include "skg/synth/llm.hpp"
#include "skg/synth/payload.hpp"
#include "skg/synth/prompt.hpp"
#include "skg/util/json_reader.hpp"

namespace skg::synth {

using nlohmann::json;

namespace {

std::optional<Timestamp> timestamp_of(const SkgNode& n) {
  const Value* v = n.attr(vocab::kTimestamp);
  if (v != nullptr && v->is_timestamp()) return v->as_timestamp();
  return std::nullopt;
}

bool evidence_grounded(const ComplaintCase& x, const std::string& label) {
  if (label.empty()) return false;
  for (const auto& a : x.evidence_assets) {
    if (a.asset_id == label) return true;
    if (a.extracted_text && a.extracted_text->find(label) != std::string::npos) return true;
  }
  return false;
}

Finding blocking(std::string check, FindingSource source, std::vector<std::string> refs, std::string message) {
  return {std::move(check), rules::Severity::Blocking, source, std::move(refs), std::move(message)};
}

}  // namespace

std::string_view to_string(FindingSource s) noexcept {
  switch (s) {
    case FindingSource::Structural: return "structural";
    case FindingSource::Constraint: return "constraint";
    case FindingSource::EvidenceXref: return "evidence_xref";
    case FindingSource::LlmJudge: return "llm_judge";
  }
  return "?";
}

bool VerificationReport::has_blocking() const { return blocking_count() > 0; }

std::size_t VerificationReport::blocking_count() const {
  return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(),
                                                [](const Finding& f) { return f.severity == rules::Severity::Blocking; }));
}

json finding_to_json(const Finding& f) {
  return {{"check_id", f.check_id},
          {"severity", rules::to_string(f.severity)},
          {"source", to_string(f.source)},
          {"refs", f.refs},
          {"message", f.message}};
}

json report_to_json(const VerificationReport& r) {
  json findings = json::array();
  for (const auto& f : r.findings) findings.push_back(finding_to_json(f));
  return {{"iteration", r.iteration}, {"findings", findings}};
}

std::vector<Finding> deterministic_findings(const ComplaintCase& x, const GenerationBundle& b,
                                            const rules::ConstraintSet& c) {
  std::vector<Finding> out;
  if (!b.graph) return out;
  const auto& g = *b.graph;

  for (const auto& v : validate_graph(g).violations) out.push_back(blocking(v.code, FindingSource::Structural, v.refs, v.message));
  for (const auto& [id, coupling] : classify_nodes(g)) {
    if (coupling == CouplingClass::Strong && !b.description.coverage.contains(id)) {
      out.push_back(blocking("description-coverage", FindingSource::Structural, {id},
                             "strongly coupled node " + id + " is not covered by the description"));
    }
  }

  for (const auto& v : rules::evaluate(g, c)) {
    out.push_back({"rule:" + v.rule_id, v.severity, FindingSource::Constraint, v.refs, v.message});
  }

  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::Evidence && !evidence_grounded(x, n.label)) {
      out.push_back(blocking("evidence-xref-missing", FindingSource::EvidenceXref, {n.node_id},
                             "evidence '" + n.label + "' matches no asset id or extracted text of the case"));
    }
  }

  if (const auto opened = x.opened_at()) {
    for (const auto& n : g.nodes) {
      const auto t = timestamp_of(n);
      if (n.kind == NodeKind::Event && t && *t < *opened) {
        out.push_back(blocking("timeline-order", FindingSource::EvidenceXref, {n.node_id},
                               "event " + n.node_id + " at " + t->to_string() + " precedes case creation at " +
                                   opened->to_string()));
      }
    }
  }
  for (const auto& e : g.edges) {
    if (e.relation != RelationType::Precedes) continue;
    const SkgNode* s = g.find_node(e.src);
    const SkgNode* d = g.find_node(e.dst);
    if (s == nullptr || d == nullptr) continue;
    const auto ts = timestamp_of(*s);
    const auto td = timestamp_of(*d);
    if (ts && td && *ts > *td) {
      out.push_back(blocking("timeline-order", FindingSource::EvidenceXref, {e.edge_id, e.src, e.dst},
                             e.src + " is said to precede " + e.dst + " but happened later"));
    }
  }

  for (const auto& q : b.qa) {
    try {
      const auto gold = corpus::gold_answer(g, q.subtask);
      if (q.gold().text != gold) {
        out.push_back(blocking("qa-gold-mismatch", FindingSource::Structural, {q.qa_id},
                               "question " + q.qa_id + " marks '" + q.gold().text + "' but the graph gives '" + gold + "'"));
      }
    } catch (const Error& e) {
      if (e.code() != Errc::MissingAttribute) throw;
      out.push_back(blocking("qa-unsupported", FindingSource::Structural, {q.qa_id},
                             "question " + q.qa_id + " asks about something the graph lacks"));
    }
  }
  return out;
}

std::vector<Finding> parse_judge_findings(const std::string& raw, bool promote) {
  const auto severity = promote ? rules::Severity::Blocking : rules::Severity::Advisory;
  try {
    const auto blocks = fenced_blocks(raw, kFindingsFence);
    if (blocks.size() != 1) throw Error(Errc::NoPayloadBlock, "expected one findings block");
    const auto doc = util::parse_json(blocks.front());
    if (!doc.is_array()) util::schema_error("", "findings must be an array");
    std::vector<Finding> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      util::ObjectReader r(doc[i], "/" + std::to_string(i));
      Finding f;
      f.check_id = "judge:" + r.nonempty("check_id");
      f.message = r.string("message");
      if (const auto* refs = r.optional("refs")) {
        for (const auto& ref : *refs) {
          if (!ref.is_string()) util::schema_error(r.child("refs"), "refs must be strings");
          f.refs.push_back(ref.get<std::string>());
        }
      }
      r.finish();
      f.severity = severity;
      f.source = FindingSource::LlmJudge;
      out.push_back(std::move(f));
    }
    return out;
  } catch (const Error& e) {
    return {{"judge-unparseable", rules::Severity::Advisory, FindingSource::LlmJudge, {}, e.what()}};
  }
}

VerificationReport run_verify(const ComplaintCase& x, const GenerationBundle& b, const rules::ConstraintSet& c,
                              const VerifyOptions& opts, const JudgeContext& judge) {
  VerificationReport r;
  r.iteration = b.iteration;
  r.findings = deterministic_findings(x, b, c);
  if (opts.llm_judge && !opts.skip_verification && judge.client != nullptr && judge.verify_template != nullptr) {
    LlmRequest req;
    req.messages = {{"user", render_prompt(*judge.verify_template, x, &b, nullptr)}};
    req.temperature = judge.config != nullptr ? judge.config->verify_temperature : Decimal(0, 0);
    req.max_tokens = judge.config != nullptr ? judge.config->max_output_tokens : 0;
    req.stage = "verify";
    req.case_id = x.case_id;
    const auto reply = judge.client->complete(req);
    if (judge.raw_out != nullptr) *judge.raw_out = reply.text;
    if (judge.retries_out != nullptr) *judge.retries_out = reply.retries;
    auto extra = parse_judge_findings(reply.text, opts.promote_judge);
    r.findings.insert(r.findings.end(), extra.begin(), extra.end());
  }
  return r;
}

}  // namespace skg::synth

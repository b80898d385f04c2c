#include "skg/synth/prompt.hpp"

#include <algorithm>
#include <array>

#include "skg/error.hpp"
#include "skg/synth/verify.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/text.hpp"

namespace skg::synth {

namespace {

constexpr std::array kKnown{"narrative", "evidence_texts", "metadata", "history", "policies",
                            "prior_bundle", "findings", "case_id"};

[[noreturn]] void missing(const std::string& what, const std::string& name) {
  throw Error(Errc::MissingPlaceholder, what, {{"placeholder", name}});
}

std::string evidence_texts(const ComplaintCase& x) {
  std::string out;
  for (const auto& a : x.evidence_assets) {
    out += "- " + a.asset_id + " (" + std::string(to_string(a.medium)) + "): " + a.extracted_text.value_or("(no text)") + "\n";
  }
  return out.empty() ? "(none)\n" : out;
}

std::string metadata_text(const ComplaintCase& x) {
  std::string out;
  for (const auto& [k, v] : x.metadata) out += k + ": " + v.to_display() + "\n";
  return out.empty() ? "(none)\n" : out;
}

std::string history_text(const ComplaintCase& x) {
  std::string out;
  for (const auto& h : x.history) out += h.timestamp.to_string() + " " + std::string(to_string(h.actor)) + ": " + h.text + "\n";
  return out.empty() ? "(none)\n" : out;
}

std::string policies_text(const ComplaintCase& x) {
  std::string out;
  for (const auto& p : x.policy_clauses) out += "- [" + p.clause_id + "] " + p.title + ": " + p.body + "\n";
  return out.empty() ? "(none)\n" : out;
}

std::string findings_text(const VerificationReport& r) {
  std::string out;
  for (const auto& f : r.findings) {
    out += "- [" + std::string(rules::to_string(f.severity)) + "] " + f.check_id + " (" + std::string(to_string(f.source)) + ")";
    if (!f.refs.empty()) out += " refs " + util::join(f.refs, ",");
    out += ": " + f.message + "\n";
  }
  return out.empty() ? "(none)\n" : out;
}

}  // namespace

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::Generate: return "generate";
    case Stage::Verify: return "verify";
    case Stage::Refine: return "refine";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view s) noexcept {
  for (auto x : {Stage::Generate, Stage::Verify, Stage::Refine}) {
    if (to_string(x) == s) return x;
  }
  return std::nullopt;
}

std::vector<std::string> placeholders(const std::string& body) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = body.find("{{", pos)) != std::string::npos) {
    const auto end = body.find("}}", pos + 2);
    if (end == std::string::npos) missing("unterminated placeholder", body.substr(pos, 20));
    const auto name = util::trim(body.substr(pos + 2, end - pos - 2));
    if (std::find(kKnown.begin(), kKnown.end(), name) == kKnown.end()) missing("unknown placeholder {{" + name + "}}", name);
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    pos = end + 2;
  }
  return out;
}

std::map<Stage, PromptTemplate> load_templates(const std::string& dir) {
  std::map<Stage, PromptTemplate> out;
  for (auto s : {Stage::Generate, Stage::Verify, Stage::Refine}) {
    PromptTemplate t;
    t.template_id = std::string(to_string(s));
    t.stage = s;
    t.body = util::read_file(dir + "/" + t.template_id + ".prompt");
    if (util::trim(t.body).empty()) throw Error(Errc::MissingPlaceholder, "empty template " + t.template_id);
    placeholders(t.body);
    out[s] = std::move(t);
  }
  return out;
}

std::string render_prompt(const PromptTemplate& t, const ComplaintCase& x, const GenerationBundle* prior,
                          const VerificationReport* report) {
  if (t.body.empty()) throw Error(Errc::MissingPlaceholder, "template " + t.template_id + " has an empty body");
  if (t.stage != Stage::Generate && prior == nullptr) missing(std::string(to_string(t.stage)) + " needs a prior bundle", "prior_bundle");
  if (t.stage == Stage::Refine && report == nullptr) missing("refine needs a verification report", "findings");

  const auto value = [&](const std::string& name) -> std::string {
    if (name == "narrative") return x.narrative;
    if (name == "evidence_texts") return evidence_texts(x);
    if (name == "metadata") return metadata_text(x);
    if (name == "history") return history_text(x);
    if (name == "policies") return policies_text(x);
    if (name == "case_id") return x.case_id;
    if (name == "prior_bundle") {
      if (prior == nullptr) missing("no prior bundle for {{prior_bundle}}", name);
      return util::dump_canonical(bundle_payload_to_json(*prior));
    }
    if (report == nullptr) missing("no report for {{findings}}", name);
    return findings_text(*report);
  };

  placeholders(t.body);
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = t.body.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = t.body.find("}}", open + 2);
    out.append(t.body, pos, open - pos);
    out += value(util::trim(t.body.substr(open + 2, close - open - 2)));
    pos = close + 2;
  }
  out.append(t.body, pos);
  return out;
}

}  // namespace skg::synth

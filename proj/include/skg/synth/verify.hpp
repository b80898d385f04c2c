#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/core/bundle.hpp"
#include "skg/core/case.hpp"
#include "skg/rules/ast.hpp"

namespace skg::synth {

enum class FindingSource { Structural, Constraint, EvidenceXref, LlmJudge };
std::string_view to_string(FindingSource s) noexcept;

struct Finding {
  std::string check_id;
  rules::Severity severity = rules::Severity::Blocking;
  FindingSource source = FindingSource::Structural;
  std::vector<std::string> refs;
  std::string message;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct VerificationReport {
  std::size_t iteration = 0;
  std::vector<Finding> findings;

  bool has_blocking() const;
  std::size_t blocking_count() const;
};

nlohmann::json finding_to_json(const Finding& f);
nlohmann::json report_to_json(const VerificationReport& r);

class LlmClient;
struct PromptTemplate;
struct LlmClientConfig;

struct VerifyOptions {
  /// Ask the model for judge findings (advisory unless promoted).
  bool llm_judge = false;
  bool promote_judge = false;
  bool skip_verification = false;
};

struct JudgeContext {
  LlmClient* client = nullptr;
  const PromptTemplate* verify_template = nullptr;
  const LlmClientConfig* config = nullptr;
  /// Receives the judge's raw reply and retry count when judging ran.
  std::string* raw_out = nullptr;
  int* retries_out = nullptr;
};

/// Deterministic checks: structure and description coverage, rule
/// violations, evidence cross-references, timeline order and QA gold
/// agreement. With judging enabled the model's findings are appended; its
/// transport failures propagate as TransportError.
VerificationReport run_verify(const ComplaintCase& x, const GenerationBundle& b, const rules::ConstraintSet& c,
                              const VerifyOptions& opts = {}, const JudgeContext& judge = {});

/// The deterministic portion alone.
std::vector<Finding> deterministic_findings(const ComplaintCase& x, const GenerationBundle& b,
                                            const rules::ConstraintSet& c);

/// Judge reply: one fenced `skg-findings` block holding an array of
/// {check_id, message, refs?}. Anything else yields one advisory
/// `judge-unparseable` finding.
std::vector<Finding> parse_judge_findings(const std::string& raw, bool promote);

}  // namespace skg::synth

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/core/bundle.hpp"
#include "skg/core/case.hpp"
#include "skg/rules/ast.hpp"
#include "skg/synth/llm.hpp"
#include "skg/synth/prompt.hpp"
#include "skg/synth/verify.hpp"

namespace skg::synth {

struct AblationToggles {
  bool skip_verification = false;
  bool skip_graph = false;
  bool skip_policy_nodes = false;
};

/// Parses "skip_verification,skip_graph,..."; unknown names are BadRequest.
AblationToggles parse_ablations(std::string_view csv);

struct LoopConfig {
  std::size_t k_max = 3;
  bool early_stop = true;
  AblationToggles toggles;
  bool llm_judge = false;
  bool promote_judge = false;
};

struct TraceRecord {
  std::string case_id;
  std::string stage;
  std::size_t iteration = 0;
  std::string prompt_digest;
  std::string raw_response;
  bool parsed_ok = false;
  std::size_t findings_count = 0;
  int retries = 0;
  std::string error;  // error code name when the call or parse failed
  std::string started_at;
  std::string finished_at;
};

nlohmann::json trace_to_json(const TraceRecord& t);

struct LoopOutcome {
  enum class Kind { Final, Escalated };
  Kind kind = Kind::Escalated;
  std::string case_id;
  /// The accepted bundle (Final only).
  std::optional<GenerationBundle> final;
  std::vector<GenerationBundle> bundles;
  std::vector<VerificationReport> reports;
  std::vector<TraceRecord> trace;
  std::vector<std::string> flags;
  std::string reason;

  bool is_final() const { return kind == Kind::Final; }
};

struct Templates {
  PromptTemplate generate;
  PromptTemplate verify;
  PromptTemplate refine;
};
Templates templates_from(const std::map<Stage, PromptTemplate>& loaded);

/// One generate call: render, request, parse. Parse failures are ParseFailure
/// with the inner error code in details()["cause"] and the raw text.
GenerationBundle call_generate(const ComplaintCase& x, const PromptTemplate& p, const LlmClientConfig& cfg,
                               LlmClient& client, bool graph_required = true, TraceRecord* trace = nullptr);

/// One refine call on a bundle with blocking findings (with early stopping
/// off it may also be called on a clean bundle).
GenerationBundle call_refine(const ComplaintCase& x, const GenerationBundle& b, const VerificationReport& report,
                             const PromptTemplate& p, const LlmClientConfig& cfg, LlmClient& client,
                             bool graph_required = true, TraceRecord* trace = nullptr);

/// Generate, then verify/refine rounds up to k_max bundles. Final as soon as a
/// verify pass has no blocking findings (early stop) or when the last pass is
/// clean; otherwise Escalated with the full trace. Transport and auth
/// failures escalate too: a case is never dropped.
LoopOutcome run_loop(const ComplaintCase& x, const Templates& p, const rules::ConstraintSet& c,
                     const LlmClientConfig& cfg, LlmClient& client, const LoopConfig& loop_cfg);

/// Serialized appender of trace records, one JSON document per line.
class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path);
  void append(std::span<const TraceRecord> records);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

/// Runs every case under a pool of `workers` threads. Outcomes come back in
/// input order; traces are appended as each case finishes.
std::vector<LoopOutcome> run_batch(std::span<const ComplaintCase> cases, const Templates& p,
                                   const rules::ConstraintSet& c, const LlmClientConfig& cfg, LlmClient& client,
                                   const LoopConfig& loop_cfg, std::size_t workers = 1, TraceWriter* trace = nullptr);

}  // namespace skg::synth

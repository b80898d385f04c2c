#pragma once

#include <map>
#include <mutex>
#include <string>

#include "skg/core/bundle.hpp"
#include "skg/core/case.hpp"
#include "skg/synth/llm.hpp"

namespace skg::synth {

enum class Defect {
  /// An Evidence node names an asset the case does not have.
  EvidenceXref,
  /// The final decision breaks a blocking rule (Refund with no sufficient
  /// evidence).
  RuleViolation,
};

/// Deterministic stand-in for the model service. Generate and refine answer
/// with the scene the case's metadata describes (graph, rendered description,
/// one question per subtask); the first `defect_rounds` answers per case carry
/// the chosen defect. Verify answers with an empty findings block.
class SceneMockClient : public LlmClient {
 public:
  SceneMockClient(std::map<std::string, ComplaintCase> cases, std::size_t defect_rounds = 0,
                  Defect defect = Defect::EvidenceXref);
  LlmReply complete(const LlmRequest& request) override;

  std::size_t calls() const;

 private:
  std::map<std::string, ComplaintCase> cases_;
  std::size_t defect_rounds_;
  Defect defect_;
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t> rounds_;
  std::size_t calls_ = 0;
};

/// The bundle SceneMockClient produces for a case, optionally defective.
GenerationBundle mock_bundle(const ComplaintCase& c, bool defective, Defect defect = Defect::EvidenceXref);

}  // namespace skg::synth

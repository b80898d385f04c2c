#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skg/core/bundle.hpp"
#include "skg/core/case.hpp"

namespace skg::synth {

enum class Stage { Generate, Verify, Refine };
std::string_view to_string(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view s) noexcept;

struct Finding;
struct VerificationReport;

/// Prompt body with {{name}} placeholders. Known names: narrative,
/// evidence_texts, metadata, history, policies, prior_bundle, findings,
/// case_id.
struct PromptTemplate {
  std::string template_id;
  Stage stage = Stage::Generate;
  std::string body;
};

/// Placeholder names in order of first appearance. Throws MissingPlaceholder
/// for unknown names or an unterminated "{{".
std::vector<std::string> placeholders(const std::string& body);

/// Loads generate.prompt, verify.prompt and refine.prompt from a directory.
std::map<Stage, PromptTemplate> load_templates(const std::string& dir);

/// Deterministic substitution. Refine needs both prior and report, verify
/// needs prior; a placeholder without a value is a MissingPlaceholder error.
std::string render_prompt(const PromptTemplate& t, const ComplaintCase& x, const GenerationBundle* prior,
                          const VerificationReport* report);

}  // namespace skg::synth

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/core/bundle.hpp"
#include "skg/corpus/bench.hpp"
#include "skg/eval/metrics.hpp"
#include "skg/eval/split.hpp"
#include "skg/rules/ast.hpp"
#include "skg/synth/llm.hpp"

namespace skg::eval {

enum class Slice { Full, Corrupt10, Corrupt30, Rare };
std::string_view to_string(Slice s) noexcept;
std::optional<Slice> parse_slice(std::string_view s) noexcept;
/// Comma-separated slice names; BadRequest on unknown or repeated names.
std::vector<Slice> parse_slices(std::string_view list);
/// Evidence-asset removal level of a slice (0 for full and rare).
double corruption_level(Slice s) noexcept;

/// Option chosen by a free-text reply. The reply should open with the option
/// letter ("B", "B.", "(B) ..."); otherwise the earliest standalone option
/// letter or option text found in the reply wins. nullopt when nothing
/// matches.
std::optional<std::size_t> extract_option(std::string_view reply, std::span<const QAOption> options);
/// Classification label named by a reply: an exact (case-insensitive) match of
/// the trimmed reply, else the earliest label occurring in it.
std::optional<std::string> extract_label(std::string_view reply, std::span<const std::string> labels);

struct Prediction {
  std::string record_id;
  std::optional<std::size_t> option_index;
  std::optional<std::string> label;
  std::optional<DecisionAction> action;
  std::string rationale;
  std::int64_t latency_ms = 0;
  /// No usable answer (unparseable reply or transport failure).
  bool abstained = false;
  std::string abstain_reason;
};

/// Everything a predictor sees for one record under one slice.
struct EvalItem {
  const corpus::BenchRecord* record = nullptr;
  Slice slice = Slice::Full;
  nlohmann::json inputs;  // possibly corrupted
  /// Candidate labels for CFPB records.
  std::vector<std::string> labels;
};

/// Prompt sent to a model for one item.
std::string render_eval_prompt(const EvalItem& item);

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Prediction predict(const EvalItem& item) = 0;
  /// Identifies the prediction source in the config digest.
  virtual std::string source() const = 0;
};

/// Answers from a JSONL file of {record_id, answer, slice?}. An entry with a
/// slice applies to that slice only and takes precedence over one without.
class ReplayPredictor : public Predictor {
 public:
  explicit ReplayPredictor(std::string_view jsonl);
  Prediction predict(const EvalItem& item) override;
  std::string source() const override { return "replay:" + digest_; }

 private:
  std::map<std::pair<std::string, std::string>, std::string> answers_;  // (slice or "", record_id)
  std::string digest_;
};

/// Queries a chat model at temperature 0. Transport failures become
/// abstentions.
class ModelPredictor : public Predictor {
 public:
  ModelPredictor(synth::LlmClient& client, std::string model_name, std::int64_t max_tokens = 256);
  Prediction predict(const EvalItem& item) override;
  std::string source() const override { return "model:" + model_name_; }

 private:
  synth::LlmClient& client_;
  std::string model_name_;
  std::int64_t max_tokens_;
};

/// Fills option_index/label and action from a raw answer string.
Prediction interpret_answer(const EvalItem& item, std::string_view answer);

struct SubtaskScore {
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t abstained = 0;
  /// Accuracy, or macro-F1 for action and responsibility; in [0, 1].
  Score score = 0;
  bool macro = false;
};

struct EvalReport {
  Slice slice = Slice::Full;
  std::size_t records = 0;
  std::size_t abstentions = 0;
  std::map<Subtask, SubtaskScore> subtasks;
  std::optional<SubtaskScore> cfpb_product;  // accuracy
  std::optional<SubtaskScore> cfpb_issue;    // macro-F1
  // Aggregates on the 0-100 scale except policy_consistency in [0, 1].
  std::optional<Score> avg_text;
  std::optional<Score> avg_mm;
  std::optional<Score> policy_consistency;
  /// Accuracy over all scene questions of the slice.
  std::optional<Score> accuracy;
  std::optional<Score> rare_type_acc;
  std::string config_digest;
};

struct EvalOptions {
  std::vector<Slice> slices{Slice::Full};
  /// Records of this split are evaluated; nullopt evaluates every record.
  std::optional<Split> eval_split = Split::Test;
  std::uint64_t corruption_seed = 0;
  double rare_threshold = kRareThreshold;
  std::size_t workers = 4;
  /// Digest of the rule set, part of the config digest.
  std::string rules_digest;
};

struct EvalRun {
  std::vector<EvalReport> reports;
  /// Per slice, sorted by record_id.
  std::map<Slice, std::vector<Prediction>> predictions;
};

/// Evaluates the bench stream per slice. Policy consistency is computed when
/// `graphs` is set, over action and resolution questions. Throws
/// ReplayMismatch when a replay file misses a record.
EvalRun run_eval(std::span<const corpus::BenchRecord> bench, Predictor& predictor, const rules::ConstraintSet& c,
                 const GraphLookup& graphs, const EvalOptions& opts);

/// {schema_version, config_digest, config, slices: {name: block}}.
nlohmann::json report_to_json(std::span<const EvalReport> reports, const nlohmann::json& config);
/// Header "slice,subtask,n,correct,abstained,score,percent" then one row per
/// (slice, subtask) and one per aggregate.
std::string report_to_csv(std::span<const EvalReport> reports);
/// Replay-format lines {record_id, slice, answer}.
std::string predictions_to_jsonl(const EvalRun& run, std::span<const corpus::BenchRecord> bench);

/// The configuration object whose digest stamps every report.
nlohmann::json eval_config(std::span<const corpus::BenchRecord> bench, const Predictor& predictor,
                           const EvalOptions& opts);

}  // namespace skg::eval

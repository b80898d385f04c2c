#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/core/bundle.hpp"
#include "skg/core/case.hpp"
#include "skg/corpus/cfpb.hpp"
#include "skg/error.hpp"
#include "skg/eval/split.hpp"
#include "skg/rules/ast.hpp"
#include "skg/rules/generalize.hpp"

namespace skg::corpus {

/// A synthesis result accepted for emission, with its source case.
struct FinalCase {
  ComplaintCase case_data;
  GenerationBundle bundle;
  /// Pipeline markers such as "unverified" or "plain_text".
  std::vector<std::string> flags;
};

nlohmann::json final_to_json(const FinalCase& f);
FinalCase final_from_json(const nlohmann::json& j, const std::string& path = "");
std::vector<FinalCase> read_finals(std::string_view jsonl);

enum class Benchmark { Text, MM, CfpbProduct, CfpbIssue };
std::string_view to_string(Benchmark b) noexcept;
std::optional<Benchmark> parse_benchmark(std::string_view s) noexcept;

struct BenchRecord {
  std::string record_id;
  Benchmark benchmark = Benchmark::Text;
  std::string base_case_id;
  std::string graph_id;  // empty for CFPB records
  eval::Split split = eval::Split::Train;
  std::string complaint_type;
  bool variant = false;
  nlohmann::json inputs = nlohmann::json::object();
  std::optional<QAItem> qa;          // scene benchmarks
  std::optional<std::string> label;  // CFPB benchmarks
};

nlohmann::json record_to_json(const BenchRecord& r);
BenchRecord record_from_json(const nlohmann::json& j, const std::string& path = "");

/// One object per line, canonical key order.
std::string to_jsonl(const std::vector<nlohmann::json>& docs);
std::vector<nlohmann::json> parse_jsonl(std::string_view text);
std::string records_to_jsonl(std::span<const BenchRecord> records);
std::vector<BenchRecord> read_bench(std::string_view jsonl);

struct BuildOptions {
  eval::SplitRatios ratios;
  std::uint64_t split_seed = 0;
  std::uint64_t seed = 0;
  /// Rules for generalization; required when generalize is set.
  const rules::ConstraintSet* rules = nullptr;
  bool generalize = true;
  /// false: primary edits only (no strong/weak coordination).
  bool coordinate = true;
  std::size_t variants_per_case = rules::kDefaultVariantsPerCase;
};

/// A graph ready for emission: a base final or one of its variants.
struct SceneItem {
  const FinalCase* base = nullptr;
  std::optional<SceneKnowledgeGraph> graph;
  SceneDescription description;
  bool variant = false;
};

struct RejectedEdit {
  std::string graph_id;
  rules::EditRequest request;
  Errc code = Errc::UnsatisfiableEdit;
  std::string message;
};

/// Base items followed by each base's variants. Requests that cannot be
/// honored are reported in `rejected`, never silently dropped.
std::vector<SceneItem> expand_finals(std::span<const FinalCase> finals, const BuildOptions& opts,
                                     std::vector<RejectedEdit>* rejected = nullptr);

/// Per-graph QA for the text benchmark: 2 or 3 text subtasks (3 with
/// probability 0.28, matching 7,504 QA over 3,286 cases). Base graphs reuse
/// the bundle's items; variants get fresh ones.
std::vector<QAItem> select_text_qa(const SceneItem& item, const BuildOptions& opts);
/// Multimodal counterpart: 3 subtasks with probability 0.64 (18,237 / 6,914).
std::vector<QAItem> select_mm_qa(const FinalCase& f, const BuildOptions& opts);

inline constexpr double kTextThirdQuestion = 0.28;
inline constexpr double kMmThirdQuestion = 0.64;
inline constexpr std::size_t kHistorySummaryLength = 5;

std::vector<BenchRecord> build_text_bench(std::span<const SceneItem> items, const BuildOptions& opts);
/// Base finals only: multimodal inputs belong to the original case.
std::vector<BenchRecord> build_mm_bench(std::span<const FinalCase> finals, const BuildOptions& opts);
std::vector<BenchRecord> build_cfpb_bench(const CfpbIngest& ingest, Benchmark which, const BuildOptions& opts);

/// Multimodal inputs of a case: narrative, asset refs, metadata and a summary
/// of the last five interactions.
nlohmann::json mm_inputs(const ComplaintCase& c);
/// Chronological "<timestamp> <actor>: <text>" lines of the last n records.
std::string history_summary(const ComplaintCase& c, std::size_t n = kHistorySummaryLength);

enum class CorpusStage { Pt, Sft, Mm };
std::string_view to_string(CorpusStage s) noexcept;
std::optional<CorpusStage> parse_corpus_stage(std::string_view s) noexcept;

/// pt: one document per item (description followed by its QA); sft: one
/// {instruction, context, response} per text QA; mm: one multimodal record
/// per MM QA of each base final.
std::vector<nlohmann::json> emit_training_corpus(std::span<const SceneItem> items, std::span<const FinalCase> finals,
                                                 CorpusStage stage, const BuildOptions& opts);

/// Prompt form of a question: the question then one "<label>. <text>" line per
/// option.
std::string render_question(const QAItem& q);

}  // namespace skg::corpus

#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/core/case.hpp"
#include "skg/core/graph.hpp"
#include "skg/review/store.hpp"
#include "skg/rules/ast.hpp"
#include "skg/synth/loop.hpp"

namespace skg::review {

enum class ReviewStage { Annotator, Senior };
enum class TaskStatus { Pending, Claimed, Approved, Rejected, Edited };
std::string_view to_string(ReviewStage s) noexcept;
std::string_view to_string(TaskStatus s) noexcept;
std::optional<ReviewStage> parse_review_stage(std::string_view s) noexcept;
std::optional<TaskStatus> parse_task_status(std::string_view s) noexcept;

struct ReviewTask {
  std::string task_id;
  std::string case_id;
  /// The synthesized graph this review thread is about.
  std::string graph_id;
  ReviewStage stage = ReviewStage::Annotator;
  TaskStatus status = TaskStatus::Pending;
  std::optional<std::string> reviewer_id;
  std::string decision_note;
  std::optional<EditLog> edit_log;
  /// Graph shown to the reviewer: graph_id, or the annotator's edited graph
  /// for a senior task.
  std::string review_graph_id;
  /// Graph produced by an edit decision.
  std::optional<std::string> result_graph_id;
  Timestamp created_at;
  std::optional<Timestamp> claimed_at;
  std::optional<Timestamp> decided_at;
  /// Bumped on every persisted change; the highest revision is current.
  std::int64_t revision = 0;

  friend bool operator==(const ReviewTask&, const ReviewTask&) = default;
};

nlohmann::json task_to_json(const ReviewTask& t);
ReviewTask task_from_json(const nlohmann::json& j, const std::string& path = "");

struct Decision {
  enum class Kind { Approve, Reject, Edit };
  Kind kind = Kind::Approve;
  std::string note;
  EditLog edit_log;
};

enum class ReviewMode { All, EscalatedOnly };

struct ServiceConfig {
  std::chrono::minutes lease{60};
  ReviewMode mode = ReviewMode::EscalatedOnly;
};

struct AuditEvent {
  std::uint64_t seq = 0;
  Timestamp at;
  RecordKind kind = RecordKind::Trace;
  std::string key;
  nlohmann::json meta;
};

/// Review workflow over a Store: annotators check a synthesized graph against
/// its case, senior reviewers audit the result. Every task change is a new
/// store record, so the store alone reconstructs the queue.
class ReviewService {
 public:
  ReviewService(Store& store, rules::ConstraintSet rules, ServiceConfig cfg = {}, Clock clock = system_now);

  std::string add_case(const ComplaintCase& c);
  /// Stores a structurally valid graph (consistency is not required).
  std::string add_graph(const SceneKnowledgeGraph& g, const std::string& source = "synthesis");
  std::string add_trace(const std::string& case_id, std::span<const synth::TraceRecord> trace,
                        const std::vector<std::string>& graph_ids);

  /// Stores case, last graph and trace of a loop outcome. Escalated outcomes
  /// (and finals in review-all mode) get an annotator task. nullopt when no
  /// task was created; an escalation without any parsed graph has nothing to
  /// review and stores case and trace only.
  std::optional<ReviewTask> ingest_outcome(const ComplaintCase& c, const synth::LoopOutcome& outcome);

  /// Throws NotFound, StageOrderViolation, DuplicateTask.
  ReviewTask enqueue_task(const std::string& case_id, const std::string& graph_id, ReviewStage stage);
  /// Throws NotFound, WrongState.
  ReviewTask claim_task(const std::string& task_id, const std::string& reviewer_id);
  /// Throws NotFound, WrongState, WrongReviewer, InvalidEdit, BadRequest.
  ReviewTask submit_decision(const std::string& task_id, const std::string& reviewer_id, const Decision& d);

  ReviewTask task(const std::string& task_id);
  std::vector<ReviewTask> list_tasks(std::optional<ReviewStage> stage = {}, std::optional<TaskStatus> status = {});

  /// Store records referring to the graph, in write order. Throws NotFound.
  std::vector<AuditEvent> audit_trail(const std::string& graph_id) const;

  /// Final graphs of threads whose senior task was approved or edited and
  /// that still validate and satisfy the rules now.
  std::vector<std::string> list_finalized() const;

  SceneKnowledgeGraph graph(const std::string& graph_id) const;
  ComplaintCase case_data(const std::string& case_id) const;
  bool has_graph(const std::string& graph_id) const;

  const rules::ConstraintSet& rules() const { return rules_; }
  Store& store() { return store_; }

 private:
  void expire_leases();
  ReviewTask& persist(ReviewTask t);
  ReviewTask& find_task(const std::string& task_id);
  ReviewTask enqueue_locked(const std::string& case_id, const std::string& graph_id, ReviewStage stage,
                            const std::string& review_graph_id);
  std::optional<std::string> key_of(const std::map<std::string, std::string>& index, const std::string& id) const;
  void index_entry(const IndexEntry& e);

  Store& store_;
  rules::ConstraintSet rules_;
  ServiceConfig cfg_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::map<std::string, ReviewTask> tasks_;
  std::map<std::string, std::string> graphs_;  // graph_id -> key
  std::map<std::string, std::string> cases_;   // case_id -> key
};

}  // namespace skg::review

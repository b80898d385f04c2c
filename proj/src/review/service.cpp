#include "skg/review/service.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "skg/core/serialize.hpp"
#include "skg/core/validate.hpp"
#include "skg/error.hpp"
#include "skg/rules/evaluate.hpp"
#include "skg/rules/generalize.hpp"
#include "skg/util/json_reader.hpp"

namespace skg::review {

using nlohmann::json;

std::string_view to_string(ReviewStage s) noexcept { return s == ReviewStage::Annotator ? "annotator" : "senior"; }

std::string_view to_string(TaskStatus s) noexcept {
  switch (s) {
    case TaskStatus::Pending: return "pending";
    case TaskStatus::Claimed: return "claimed";
    case TaskStatus::Approved: return "approved";
    case TaskStatus::Rejected: return "rejected";
    case TaskStatus::Edited: return "edited";
  }
  return "pending";
}

std::optional<ReviewStage> parse_review_stage(std::string_view s) noexcept {
  if (s == "annotator") return ReviewStage::Annotator;
  if (s == "senior") return ReviewStage::Senior;
  return std::nullopt;
}

std::optional<TaskStatus> parse_task_status(std::string_view s) noexcept {
  for (auto v : {TaskStatus::Pending, TaskStatus::Claimed, TaskStatus::Approved, TaskStatus::Rejected,
                 TaskStatus::Edited}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

json task_to_json(const ReviewTask& t) {
  json j{{"task_id", t.task_id},
         {"case_id", t.case_id},
         {"graph_id", t.graph_id},
         {"stage", to_string(t.stage)},
         {"status", to_string(t.status)},
         {"reviewer_id", t.reviewer_id ? json(*t.reviewer_id) : json(nullptr)},
         {"decision_note", t.decision_note},
         {"edit_log", t.edit_log ? edit_log_to_json(*t.edit_log) : json(nullptr)},
         {"review_graph_id", t.review_graph_id},
         {"result_graph_id", t.result_graph_id ? json(*t.result_graph_id) : json(nullptr)},
         {"created_at", t.created_at.to_string()},
         {"claimed_at", t.claimed_at ? json(t.claimed_at->to_string()) : json(nullptr)},
         {"decided_at", t.decided_at ? json(t.decided_at->to_string()) : json(nullptr)},
         {"revision", t.revision}};
  return j;
}

namespace {

Timestamp read_time(util::ObjectReader& r, const std::string& key) {
  const auto t = Timestamp::parse(r.string(key));
  if (!t) util::schema_error(r.child(key), "bad timestamp");
  return *t;
}

std::optional<std::string> opt_nullable_string(util::ObjectReader& r, const std::string& key) {
  const auto& v = r.required(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) util::schema_error(r.child(key), "expected string or null");
  return v.get<std::string>();
}

}  // namespace

ReviewTask task_from_json(const json& j, const std::string& path) {
  util::ObjectReader r(j, path);
  ReviewTask t;
  t.task_id = r.nonempty("task_id");
  t.case_id = r.nonempty("case_id");
  t.graph_id = r.nonempty("graph_id");
  const auto stage = parse_review_stage(r.string("stage"));
  if (!stage) util::schema_error(r.child("stage"), "unknown stage");
  t.stage = *stage;
  const auto status = parse_task_status(r.string("status"));
  if (!status) util::schema_error(r.child("status"), "unknown status");
  t.status = *status;
  t.reviewer_id = opt_nullable_string(r, "reviewer_id");
  t.decision_note = r.string("decision_note");
  const auto& log = r.required("edit_log");
  if (!log.is_null()) t.edit_log = edit_log_from_json(log, r.child("edit_log"));
  t.review_graph_id = r.nonempty("review_graph_id");
  t.result_graph_id = opt_nullable_string(r, "result_graph_id");
  t.created_at = read_time(r, "created_at");
  if (const auto s = opt_nullable_string(r, "claimed_at")) {
    const auto ts = Timestamp::parse(*s);
    if (!ts) util::schema_error(r.child("claimed_at"), "bad timestamp");
    t.claimed_at = *ts;
  }
  if (const auto s = opt_nullable_string(r, "decided_at")) {
    const auto ts = Timestamp::parse(*s);
    if (!ts) util::schema_error(r.child("decided_at"), "bad timestamp");
    t.decided_at = *ts;
  }
  t.revision = r.integer("revision");
  r.finish();
  return t;
}

ReviewService::ReviewService(Store& store, rules::ConstraintSet rules, ServiceConfig cfg, Clock clock)
    : store_(store), rules_(std::move(rules)), cfg_(cfg), clock_(std::move(clock)) {
  for (const auto& e : store_.entries()) index_entry(e);
}

void ReviewService::index_entry(const IndexEntry& e) {
  switch (e.kind) {
    case RecordKind::Graph:
      graphs_[e.meta.at("graph_id").get<std::string>()] = e.key;
      break;
    case RecordKind::Case:
      cases_[e.meta.at("case_id").get<std::string>()] = e.key;
      break;
    case RecordKind::Task: {
      auto t = task_from_json(util::parse_json(store_.get(e.key).payload), "task");
      auto it = tasks_.find(t.task_id);
      if (it == tasks_.end() || it->second.revision < t.revision) tasks_[t.task_id] = std::move(t);
      break;
    }
    default:
      break;
  }
}

std::string ReviewService::add_case(const ComplaintCase& c) {
  const auto key = store_.put(RecordKind::Case, canonicalize_case(c), {c.case_id}, {{"case_id", c.case_id}});
  std::lock_guard lock(mutex_);
  cases_[c.case_id] = key;
  return key;
}

std::string ReviewService::add_graph(const SceneKnowledgeGraph& g, const std::string& source) {
  std::vector<std::string> subjects;
  json meta{{"graph_id", g.graph_id}, {"case_id", g.base_case_id}, {"source", source}};
  if (const auto* p = std::get_if<GeneralizedProvenance>(&g.provenance)) {
    subjects.push_back(p->parent_graph_id);
    meta["parent_graph_id"] = p->parent_graph_id;
  }
  const auto key = store_.put(RecordKind::Graph, canonicalize(g), subjects, meta);
  std::lock_guard lock(mutex_);
  graphs_[g.graph_id] = key;
  return key;
}

std::string ReviewService::add_trace(const std::string& case_id, std::span<const synth::TraceRecord> trace,
                                     const std::vector<std::string>& graph_ids) {
  json doc = json::array();
  for (const auto& t : trace) doc.push_back(synth::trace_to_json(t));
  std::vector<std::string> subjects{case_id};
  subjects.insert(subjects.end(), graph_ids.begin(), graph_ids.end());
  return store_.put(RecordKind::Trace, util::dump_canonical(doc), subjects,
                    {{"case_id", case_id}, {"records", trace.size()}});
}

std::optional<ReviewTask> ReviewService::ingest_outcome(const ComplaintCase& c, const synth::LoopOutcome& outcome) {
  add_case(c);
  const GenerationBundle* last = nullptr;
  if (outcome.final) {
    last = &*outcome.final;
  } else {
    for (const auto& b : outcome.bundles) {
      if (b.graph) last = &b;
    }
  }
  std::vector<std::string> graph_ids;
  if (last && last->graph) {
    add_graph(*last->graph);
    graph_ids.push_back(last->graph->graph_id);
  }
  add_trace(c.case_id, outcome.trace, graph_ids);

  const bool review = !outcome.is_final() || cfg_.mode == ReviewMode::All;
  if (!review || graph_ids.empty()) return std::nullopt;
  std::lock_guard lock(mutex_);
  expire_leases();
  for (const auto& [id, t] : tasks_) {
    if (t.graph_id == graph_ids[0] && t.stage == ReviewStage::Annotator &&
        (t.status == TaskStatus::Pending || t.status == TaskStatus::Claimed)) {
      return t;
    }
  }
  return enqueue_locked(c.case_id, graph_ids[0], ReviewStage::Annotator, graph_ids[0]);
}

ReviewTask& ReviewService::persist(ReviewTask t) {
  ++t.revision;
  std::vector<std::string> subjects{t.graph_id};
  if (t.review_graph_id != t.graph_id) subjects.push_back(t.review_graph_id);
  if (t.result_graph_id) subjects.push_back(*t.result_graph_id);
  subjects.push_back(t.case_id);
  subjects.push_back(t.task_id);
  store_.put(RecordKind::Task, util::dump_canonical(task_to_json(t)), subjects,
             {{"task_id", t.task_id},
              {"stage", to_string(t.stage)},
              {"status", to_string(t.status)},
              {"revision", t.revision}});
  auto& slot = tasks_[t.task_id];
  slot = std::move(t);
  return slot;
}

void ReviewService::expire_leases() {
  const auto now = clock_();
  const auto lease = std::chrono::duration_cast<std::chrono::seconds>(cfg_.lease).count();
  std::vector<ReviewTask> expired;
  for (const auto& [id, t] : tasks_) {
    if (t.status == TaskStatus::Claimed && t.claimed_at && t.claimed_at->seconds + lease <= now.seconds) {
      expired.push_back(t);
    }
  }
  for (auto& t : expired) {
    t.status = TaskStatus::Pending;
    t.reviewer_id.reset();
    t.claimed_at.reset();
    persist(std::move(t));
  }
}

ReviewTask& ReviewService::find_task(const std::string& task_id) {
  const auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(Errc::NotFound, "no task " + task_id, {{"task_id", task_id}});
  return it->second;
}

ReviewTask ReviewService::enqueue_locked(const std::string& case_id, const std::string& graph_id, ReviewStage stage,
                                         const std::string& review_graph_id) {
  if (!graphs_.contains(graph_id)) throw Error(Errc::NotFound, "no graph " + graph_id, {{"graph_id", graph_id}});
  for (const auto& [id, t] : tasks_) {
    if (t.graph_id == graph_id && t.stage == stage &&
        (t.status == TaskStatus::Pending || t.status == TaskStatus::Claimed)) {
      throw Error(Errc::DuplicateTask, "an open " + std::string(to_string(stage)) + " task exists for " + graph_id,
                  {{"task_id", id}, {"graph_id", graph_id}});
    }
  }
  char id[32];
  std::snprintf(id, sizeof id, "task-%06zu", tasks_.size() + 1);
  ReviewTask t;
  t.task_id = id;
  t.case_id = case_id;
  t.graph_id = graph_id;
  t.stage = stage;
  t.review_graph_id = review_graph_id;
  t.created_at = clock_();
  return persist(std::move(t));
}

ReviewTask ReviewService::enqueue_task(const std::string& case_id, const std::string& graph_id, ReviewStage stage) {
  std::lock_guard lock(mutex_);
  expire_leases();
  std::string review_graph = graph_id;
  if (stage == ReviewStage::Senior) {
    const ReviewTask* passed = nullptr;
    for (const auto& [id, t] : tasks_) {
      if (t.graph_id == graph_id && t.stage == ReviewStage::Annotator &&
          (t.status == TaskStatus::Approved || t.status == TaskStatus::Edited)) {
        passed = &t;
      }
    }
    if (!passed) {
      throw Error(Errc::StageOrderViolation, "senior review of " + graph_id + " needs an approved annotator task",
                  {{"graph_id", graph_id}});
    }
    review_graph = passed->result_graph_id.value_or(passed->review_graph_id);
  }
  return enqueue_locked(case_id, graph_id, stage, review_graph);
}

ReviewTask ReviewService::claim_task(const std::string& task_id, const std::string& reviewer_id) {
  if (reviewer_id.empty()) throw Error(Errc::BadRequest, "reviewer_id is required");
  std::lock_guard lock(mutex_);
  expire_leases();
  auto t = find_task(task_id);
  if (t.status != TaskStatus::Pending) {
    throw Error(Errc::WrongState, "task " + task_id + " is " + std::string(to_string(t.status)),
                {{"task_id", task_id}, {"status", to_string(t.status)},
                 {"reviewer_id", t.reviewer_id ? json(*t.reviewer_id) : json(nullptr)}});
  }
  t.status = TaskStatus::Claimed;
  t.reviewer_id = reviewer_id;
  t.claimed_at = std::max(clock_(), t.created_at);
  return persist(std::move(t));
}

ReviewTask ReviewService::submit_decision(const std::string& task_id, const std::string& reviewer_id,
                                          const Decision& d) {
  std::lock_guard lock(mutex_);
  expire_leases();
  auto t = find_task(task_id);
  if (t.status != TaskStatus::Claimed) {
    throw Error(Errc::WrongState, "task " + task_id + " is " + std::string(to_string(t.status)),
                {{"task_id", task_id}, {"status", to_string(t.status)}});
  }
  if (t.reviewer_id != reviewer_id) {
    throw Error(Errc::WrongReviewer, "task " + task_id + " is claimed by another reviewer", {{"task_id", task_id}});
  }

  switch (d.kind) {
    case Decision::Kind::Approve:
      t.status = TaskStatus::Approved;
      break;
    case Decision::Kind::Reject:
      if (d.note.empty()) throw Error(Errc::BadRequest, "a rejection needs a note");
      t.status = TaskStatus::Rejected;
      break;
    case Decision::Kind::Edit: {
      if (d.edit_log.empty()) throw Error(Errc::BadRequest, "an edit decision needs a non-empty edit_log");
      const auto pit = graphs_.find(t.review_graph_id);
      if (pit == graphs_.end()) throw Error(Errc::NotFound, "no graph " + t.review_graph_id);
      const auto parent = parse_graph(store_.get(pit->second).payload);
      const auto edited = rules::derive_variant(parent, d.edit_log);
      const auto structural = validate_graph(edited);
      const auto found = rules::evaluate(edited, rules_);
      json violations = json::array(), problems = json::array();
      for (const auto& v : found) {
        if (v.severity == rules::Severity::Blocking) violations.push_back(rules::violation_to_json(v));
      }
      for (const auto& v : structural.violations) {
        problems.push_back({{"code", v.code}, {"refs", v.refs}, {"message", v.message}});
      }
      if (!problems.empty() || !violations.empty()) {
        throw Error(Errc::InvalidEdit, "edited graph fails validation or consistency",
                    {{"task_id", task_id}, {"structural", problems}, {"violations", violations}});
      }
      const auto key = store_.put(RecordKind::Graph, canonicalize(edited), {parent.graph_id},
                                  {{"graph_id", edited.graph_id},
                                   {"case_id", edited.base_case_id},
                                   {"source", "review-edit"},
                                   {"parent_graph_id", parent.graph_id},
                                   {"task_id", task_id},
                                   {"reviewer_id", reviewer_id}});
      graphs_[edited.graph_id] = key;
      t.status = TaskStatus::Edited;
      t.edit_log = d.edit_log;
      t.result_graph_id = edited.graph_id;
      break;
    }
  }
  t.decision_note = d.note;
  t.decided_at = std::max(clock_(), t.created_at);
  const auto decided = persist(std::move(t));

  if (decided.stage == ReviewStage::Annotator && decided.status != TaskStatus::Rejected) {
    enqueue_locked(decided.case_id, decided.graph_id, ReviewStage::Senior,
                   decided.result_graph_id.value_or(decided.review_graph_id));
  }
  return decided;
}

ReviewTask ReviewService::task(const std::string& task_id) {
  std::lock_guard lock(mutex_);
  expire_leases();
  return find_task(task_id);
}

std::vector<ReviewTask> ReviewService::list_tasks(std::optional<ReviewStage> stage, std::optional<TaskStatus> status) {
  std::lock_guard lock(mutex_);
  expire_leases();
  std::vector<ReviewTask> out;
  for (const auto& [id, t] : tasks_) {
    if (stage && t.stage != *stage) continue;
    if (status && t.status != *status) continue;
    out.push_back(t);
  }
  return out;
}

std::optional<std::string> ReviewService::key_of(const std::map<std::string, std::string>& index,
                                                 const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = index.find(id);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

bool ReviewService::has_graph(const std::string& graph_id) const { return key_of(graphs_, graph_id).has_value(); }

SceneKnowledgeGraph ReviewService::graph(const std::string& graph_id) const {
  const auto key = key_of(graphs_, graph_id);
  if (!key) throw Error(Errc::NotFound, "no graph " + graph_id, {{"graph_id", graph_id}});
  return parse_graph(store_.get(*key).payload);
}

ComplaintCase ReviewService::case_data(const std::string& case_id) const {
  const auto key = key_of(cases_, case_id);
  if (!key) throw Error(Errc::NotFound, "no case " + case_id, {{"case_id", case_id}});
  return parse_case(store_.get(*key).payload);
}

std::vector<AuditEvent> ReviewService::audit_trail(const std::string& graph_id) const {
  if (!has_graph(graph_id)) throw Error(Errc::NotFound, "no graph " + graph_id, {{"graph_id", graph_id}});
  std::vector<AuditEvent> out;
  for (const auto& e : store_.entries()) {
    if (e.kind == RecordKind::Case) continue;
    if (std::find(e.subjects.begin(), e.subjects.end(), graph_id) == e.subjects.end()) continue;
    out.push_back({e.seq, e.written_at, e.kind, e.key, e.meta});
  }
  return out;
}

std::vector<std::string> ReviewService::list_finalized() const {
  std::set<std::string> finals;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, t] : tasks_) {
      if (t.stage != ReviewStage::Senior) continue;
      if (t.status != TaskStatus::Approved && t.status != TaskStatus::Edited) continue;
      finals.insert(t.result_graph_id.value_or(t.review_graph_id));
    }
  }
  std::vector<std::string> out;
  for (const auto& id : finals) {
    const auto g = graph(id);
    if (validate_graph(g).ok() && rules::is_consistent(g, rules_)) out.push_back(id);
  }
  return out;
}

}  // namespace skg::review

#include "skg/corpus/describe.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "skg/core/vocab.hpp"
#include "skg/error.hpp"
#include "skg/rules/generalize.hpp"
#include "skg/util/rng.hpp"

namespace skg::corpus {

namespace {

class Writer {
 public:
  void line(std::string_view s, const std::vector<std::string>& ids = {}) {
    const auto begin = out_.size();
    out_.append(s);
    for (const auto& id : ids) cover_[id] = {begin, out_.size()};
    out_.push_back('\n');
  }
  SceneDescription finish(std::string graph_id) { return {std::move(graph_id), std::move(out_), std::move(cover_)}; }

 private:
  std::string out_;
  std::map<std::string, Span> cover_;
};

std::string humanize(std::string s) {
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

std::vector<const SkgNode*> of_kind(const SceneKnowledgeGraph& g, NodeKind k) {
  std::vector<const SkgNode*> out;
  for (const auto& n : g.nodes) {
    if (n.kind == k) out.push_back(&n);
  }
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->node_id < b->node_id; });
  return out;
}

std::string attrs_phrase(const SkgNode& n) {
  std::string s;
  for (const auto& [k, v] : n.attributes) {
    if (!s.empty()) s += ", ";
    s += humanize(k) + " " + humanize(v.to_display());
  }
  return s;
}

std::optional<Timestamp> timestamp_of(const SkgNode& n) {
  const Value* v = n.attr(vocab::kTimestamp);
  if (v != nullptr && v->is_timestamp()) return v->as_timestamp();
  return std::nullopt;
}

const SkgNode& required_policy(const SceneKnowledgeGraph& g) {
  const SkgNode* decision = g.final_decision();
  if (decision != nullptr) {
    std::vector<std::string> required;
    for (const auto& e : g.edges) {
      if (e.src == decision->node_id && e.relation == RelationType::Requires) required.push_back(e.dst);
    }
    std::sort(required.begin(), required.end());
    for (const auto& id : required) {
      const SkgNode* p = g.find_node(id);
      if (p != nullptr && p->kind == NodeKind::Policy && p->attr(vocab::kApplies) != nullptr) return *p;
    }
  }
  for (const auto* p : of_kind(g, NodeKind::Policy)) {
    if (p->attr(vocab::kApplies) != nullptr && p->attr(vocab::kApplies)->is_bool()) return *p;
  }
  throw Error(Errc::MissingAttribute, "graph " + g.graph_id + " has no policy with an applies flag",
              {{"graph_id", g.graph_id}, {"subtask", "policy"}});
}

std::string require_dim(const SceneKnowledgeGraph& g, SceneDim d, Subtask s) {
  const auto v = g.dim(d);
  if (!v || v->empty()) {
    throw Error(Errc::MissingAttribute, "graph " + g.graph_id + " lacks " + std::string(to_string(d)),
                {{"graph_id", g.graph_id}, {"subtask", to_string(s)}});
  }
  return *v;
}

std::vector<std::string> action_names() {
  std::vector<std::string> out;
  for (auto a : kAllActions) out.emplace_back(to_string(a));
  return out;
}

}  // namespace

SceneDescription render_scene_description(const SceneKnowledgeGraph& g) {
  Writer w;

  const auto type = g.dim(SceneDim::ComplaintType).value_or("unspecified");
  std::vector<std::string> typed;
  for (const auto& n : g.nodes) {
    if (n.attr(vocab::kComplaintType) != nullptr) typed.push_back(n.node_id);
  }
  std::sort(typed.begin(), typed.end());
  w.line("## Complaint type");
  w.line("The complaint concerns " + humanize(type) + ".", typed);

  w.line("## Evidence status");
  w.line("Overall evidence quality: " + humanize(g.dim(SceneDim::EvidenceQuality).value_or("unknown")) + ".");
  for (const auto* n : of_kind(g, NodeKind::Evidence)) {
    w.line("- " + n->label + ": " + attrs_phrase(*n) + ".", {n->node_id});
  }

  w.line("## Timeline");
  std::set<std::string> on_timeline;
  for (const auto& e : g.edges) {
    if (e.relation == RelationType::Precedes) {
      on_timeline.insert(e.src);
      on_timeline.insert(e.dst);
    }
  }
  auto events = of_kind(g, NodeKind::Event);
  std::stable_sort(events.begin(), events.end(), [&](const SkgNode* a, const SkgNode* b) {
    const bool ta = on_timeline.contains(a->node_id);
    const bool tb = on_timeline.contains(b->node_id);
    if (ta != tb) return ta;
    const auto xa = timestamp_of(*a);
    const auto xb = timestamp_of(*b);
    if (xa && xb && *xa != *xb) return *xa < *xb;
    return a->node_id < b->node_id;
  });
  for (const auto* n : events) {
    const auto when = timestamp_of(*n);
    std::string s = "- ";
    if (when) s += when->to_string() + " ";
    s += n->label;
    if (const auto stage = n->attr_string(vocab::kStage)) s += " (" + humanize(*stage) + ")";
    if (!on_timeline.contains(n->node_id)) s += ", alongside the timeline";
    w.line(s + ".", {n->node_id});
  }

  w.line("## Transactional state");
  w.line("Service stage: " + humanize(g.dim(SceneDim::ServiceStage).value_or("unknown")) +
         "; responsible party: " + humanize(g.dim(SceneDim::Responsibility).value_or("unknown")) + ".");
  for (const auto* n : of_kind(g, NodeKind::State)) w.line("- " + n->label + ": " + attrs_phrase(*n) + ".", {n->node_id});
  for (const auto* n : of_kind(g, NodeKind::Entity)) w.line("- " + n->label + ": " + attrs_phrase(*n) + ".", {n->node_id});

  w.line("## Policy cues");
  for (const auto* n : of_kind(g, NodeKind::Policy)) w.line("- " + n->label + ": " + attrs_phrase(*n) + ".", {n->node_id});

  w.line("## Candidate actions");
  for (const auto* n : of_kind(g, NodeKind::Decision)) {
    std::string s = "- " + n->label + ": " + n->attr_string(vocab::kAction).value_or("undecided");
    const Value* final = n->attr(vocab::kFinal);
    if (final != nullptr && final->is_bool() && final->as_bool()) s += " (final)";
    w.line(s + ".", {n->node_id});
  }

  return w.finish(g.graph_id);
}

std::string gold_answer(const SceneKnowledgeGraph& g, Subtask subtask) {
  switch (subtask) {
    case Subtask::Evidence: {
      bool any = false;
      for (const auto& n : g.nodes) any = any || n.kind == NodeKind::Evidence;
      if (!any) {
        throw Error(Errc::MissingAttribute, "graph " + g.graph_id + " has no evidence",
                    {{"graph_id", g.graph_id}, {"subtask", "evidence"}});
      }
      return rules::evidence_summary(g) == "sufficient" ? "sufficient" : "insufficient";
    }
    case Subtask::Policy: {
      const Value* applies = required_policy(g).attr(vocab::kApplies);
      return applies->is_bool() && applies->as_bool() ? "applies" : "does not apply";
    }
    case Subtask::Action: {
      const auto a = g.final_action();
      if (!a) {
        throw Error(Errc::MissingAttribute, "graph " + g.graph_id + " has no final decision",
                    {{"graph_id", g.graph_id}, {"subtask", "action"}});
      }
      return std::string(to_string(*a));
    }
    case Subtask::Resolution: return require_dim(g, SceneDim::ResolutionAction, subtask);
    case Subtask::Routing: return require_dim(g, SceneDim::ComplaintType, subtask);
    case Subtask::Responsibility: return require_dim(g, SceneDim::Responsibility, subtask);
  }
  return {};
}

QAItem build_qa(const SceneKnowledgeGraph& g, Subtask subtask, std::uint64_t rng_seed) {
  const std::string gold = gold_answer(g, subtask);
  util::Rng rng(rng_seed);

  QAItem q;
  q.qa_id = g.graph_id + "#" + std::string(to_string(subtask));
  q.graph_id = g.graph_id;
  q.subtask = subtask;

  std::vector<std::string> pool;
  std::size_t width = 4;
  switch (subtask) {
    case Subtask::Evidence:
      q.question = "Is the available evidence sufficient to support the customer's claim?";
      pool = {"sufficient", "insufficient"};
      width = 2;
      break;
    case Subtask::Policy:
      q.question = "Does policy clause " + required_policy(g).attr_string(vocab::kClauseId).value_or(required_policy(g).label) +
                   " apply to this complaint?";
      pool = {"applies", "does not apply"};
      width = 2;
      break;
    case Subtask::Action:
      q.question = "Which action should the platform take on this complaint?";
      pool = action_names();
      break;
    case Subtask::Resolution:
      q.question = "How should this complaint be resolved?";
      pool = action_names();
      break;
    case Subtask::Routing:
      q.question = "Which complaint category should this case be routed to?";
      pool = vocab::complaint_types();
      break;
    case Subtask::Responsibility:
      q.question = "Which party is responsible for the problem?";
      pool = vocab::parties();
      break;
  }

  std::vector<std::string> distractors;
  for (const auto& v : pool) {
    if (v != gold) distractors.push_back(v);
  }
  std::vector<std::string> options{gold};
  for (std::size_t i = 0; i + 1 < width && !distractors.empty(); ++i) {
    const auto k = static_cast<std::size_t>(rng.below(distractors.size()));
    options.push_back(distractors[k]);
    distractors.erase(distractors.begin() + static_cast<std::ptrdiff_t>(k));
  }
  rng.shuffle(std::span<std::string>(options));
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i] == gold) q.gold_index = i;
    q.options.push_back({std::string(1, static_cast<char>('A' + i)), options[i]});
  }
  return q;
}

}  // namespace skg::corpus

#include "skg/core/bundle.hpp"

#include <set>

#include "skg/core/serialize.hpp"
#include "skg/util/json_reader.hpp"

namespace skg {

using nlohmann::json;

std::string_view to_string(Subtask s) noexcept {
  switch (s) {
    case Subtask::Evidence: return "evidence";
    case Subtask::Policy: return "policy";
    case Subtask::Action: return "action";
    case Subtask::Routing: return "routing";
    case Subtask::Responsibility: return "responsibility";
    case Subtask::Resolution: return "resolution";
  }
  return "?";
}

std::optional<Subtask> parse_subtask(std::string_view s) noexcept {
  for (auto t : kAllSubtasks) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

bool is_binary(Subtask s) noexcept { return s == Subtask::Evidence || s == Subtask::Policy; }

std::vector<std::string> validate_qa(const QAItem& q) {
  std::vector<std::string> out;
  if (q.qa_id.empty()) out.emplace_back("empty qa_id");
  if (q.question.empty()) out.emplace_back("empty question");
  const auto n = q.options.size();
  if (n < 2 || n > 5) out.push_back("expected 2-5 options, got " + std::to_string(n));
  if (is_binary(q.subtask) && n != 2) out.emplace_back("binary question needs exactly 2 options");
  std::set<std::string> texts;
  std::set<std::string> labels;
  for (const auto& o : q.options) {
    if (o.text.empty()) out.emplace_back("empty option text");
    if (!texts.insert(o.text).second) out.push_back("duplicate option '" + o.text + "'");
    if (!labels.insert(o.label).second) out.push_back("duplicate label '" + o.label + "'");
  }
  if (q.gold_index >= n) out.emplace_back("gold_index out of range");
  return out;
}

json qa_to_json(const QAItem& q) {
  json options = json::array();
  for (const auto& o : q.options) options.push_back({{"label", o.label}, {"text", o.text}});
  return {{"qa_id", q.qa_id},           {"graph_id", q.graph_id}, {"subtask", to_string(q.subtask)},
          {"question", q.question},     {"options", options},     {"gold_index", q.gold_index}};
}

QAItem qa_from_json(const json& j, const std::string& path) {
  util::ObjectReader r(j, path);
  QAItem q;
  q.qa_id = r.nonempty("qa_id");
  q.graph_id = r.string("graph_id");
  const auto subtask = r.string("subtask");
  const auto parsed = parse_subtask(subtask);
  if (!parsed) util::schema_error(r.child("subtask"), "unknown subtask '" + subtask + "'");
  q.subtask = *parsed;
  q.question = r.nonempty("question");
  const auto& options = r.array("options");
  for (std::size_t i = 0; i < options.size(); ++i) {
    util::ObjectReader o(options[i], r.child("options") + "/" + std::to_string(i));
    q.options.push_back({o.nonempty("label"), o.nonempty("text")});
    o.finish();
  }
  const auto gold = r.integer("gold_index");
  if (gold < 0) util::schema_error(r.child("gold_index"), "negative gold_index");
  q.gold_index = static_cast<std::size_t>(gold);
  r.finish();
  if (const auto problems = validate_qa(q); !problems.empty()) util::schema_error(path, problems.front());
  return q;
}

json description_to_json(const SceneDescription& d) {
  json coverage = json::object();
  for (const auto& [id, span] : d.coverage) coverage[id] = {span.first, span.second};
  return {{"graph_id", d.graph_id}, {"text", d.text}, {"coverage", coverage}};
}

SceneDescription description_from_json(const json& j, const std::string& path) {
  util::ObjectReader r(j, path);
  SceneDescription d;
  d.graph_id = r.string("graph_id");
  d.text = r.nonempty("text");
  const auto& coverage = r.object("coverage");
  for (const auto& [id, span] : coverage.items()) {
    const auto where = r.child("coverage") + "/" + id;
    if (!span.is_array() || span.size() != 2 || !span[0].is_number_unsigned() || !span[1].is_number_unsigned()) {
      util::schema_error(where, "span must be [begin, end]");
    }
    const auto b = span[0].get<std::size_t>();
    const auto e = span[1].get<std::size_t>();
    if (b > e || e > d.text.size()) util::schema_error(where, "span outside the description text");
    d.coverage[id] = {b, e};
  }
  r.finish();
  return d;
}

json bundle_payload_to_json(const GenerationBundle& b) {
  json qa = json::array();
  for (const auto& q : b.qa) qa.push_back(qa_to_json(q));
  json out{{"description", description_to_json(b.description)}, {"qa", qa}};
  if (b.graph) out["graph"] = graph_to_json(*b.graph);
  return out;
}

GenerationBundle bundle_payload_from_json(const json& j, std::size_t iteration, bool graph_required,
                                          const std::string& path) {
  util::ObjectReader r(j, path);
  GenerationBundle b;
  b.iteration = iteration;
  if (graph_required) {
    b.graph = graph_from_json(r.required("graph"), r.child("graph"));
  } else if (const auto* g = r.optional("graph")) {
    b.graph = graph_from_json(*g, r.child("graph"));
  }
  b.description = description_from_json(r.object("description"), r.child("description"));
  const auto& qa = r.array("qa");
  for (std::size_t i = 0; i < qa.size(); ++i) b.qa.push_back(qa_from_json(qa[i], r.child("qa") + "/" + std::to_string(i)));
  r.finish();
  const auto& id = b.graph ? b.graph->graph_id : b.description.graph_id;
  if (b.description.graph_id != id) util::schema_error(r.child("description/graph_id"), "does not match the graph");
  for (std::size_t i = 0; i < b.qa.size(); ++i) {
    if (b.qa[i].graph_id != id) util::schema_error(r.child("qa") + "/" + std::to_string(i) + "/graph_id", "does not match the graph");
  }
  return b;
}

}  // namespace skg

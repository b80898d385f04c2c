#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <unistd.h>

#include "skg/core/serialize.hpp"
#include "skg/core/validate.hpp"
#include "skg/core/vocab.hpp"
#include "skg/rules/parser.hpp"
#include "skg/util/text.hpp"

namespace skg::test {

namespace fs = std::filesystem;

fs::path fixture_path(const std::string& rel) { return fs::path(SKG_FIXTURE_DIR) / rel; }
fs::path source_path(const std::string& rel) { return fs::path(SKG_SOURCE_DIR) / rel; }

const rules::ConstraintSet& default_rules() {
  static const auto set = rules::parse_rules(util::read_file(source_path("rules/default.skgr").string()));
  return set;
}

SceneKnowledgeGraph load_graph(const fs::path& p) { return parse_graph(util::read_file(p.string())); }

namespace {

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

const std::vector<SceneKnowledgeGraph>& fixture_graphs() {
  static const auto graphs = [] {
    std::vector<SceneKnowledgeGraph> out;
    for (const auto& p : sorted_files(fixture_path("graphs"), ".skg")) out.push_back(load_graph(p));
    return out;
  }();
  return graphs;
}

const std::vector<ComplaintCase>& fixture_cases() {
  static const auto cases = [] {
    std::vector<ComplaintCase> out;
    for (const auto& p : sorted_files(fixture_path("cases"), ".case")) {
      out.push_back(parse_case(util::read_file(p.string())));
    }
    return out;
  }();
  return cases;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("skg-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

template <typename T>
const T& pick(util::Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

std::string random_text(util::Rng& rng) {
  static const std::vector<std::string> pieces{"box",  "late", "\"quoted\"", "naïve", "退款", "a\\b",
                                               "tab\t", "line\nbreak", "x",    "  spaced "};
  std::string s = pick(rng, pieces);
  const auto extra = rng.below(3);
  for (std::uint64_t i = 0; i < extra; ++i) s += " " + pick(rng, pieces);
  return s;
}

}  // namespace

Value random_value(util::Rng& rng) {
  switch (rng.below(5)) {
    case 0:
      return Value(random_text(rng));
    case 1:
      return Value(static_cast<std::int64_t>(rng.next() % 2000001) - 1000000);
    case 2:
      return Value(Decimal(static_cast<std::int64_t>(rng.below(100000)) - 50000, static_cast<int>(rng.below(4))));
    case 3:
      return Value(Timestamp{1'600'000'000 + static_cast<std::int64_t>(rng.below(200'000'000))});
    default:
      return Value(rng.below(2) == 0);
  }
}

SceneKnowledgeGraph random_graph(util::Rng& rng, const std::string& graph_id, const RandomGraphOptions& opts) {
  SceneKnowledgeGraph g;
  g.graph_id = graph_id;
  g.base_case_id = "case-" + graph_id;

  std::vector<std::size_t> ids(opts.id_pool);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  rng.shuffle(std::span(ids));
  const std::size_t n = std::min<std::size_t>(3 + rng.below(opts.max_nodes - 2), opts.id_pool);

  const auto action = kAllActions[rng.below(kAllActions.size())];
  for (std::size_t i = 0; i < n; ++i) {
    SkgNode node;
    node.node_id = "n" + std::to_string(ids[i]);
    node.label = random_text(rng);
    // The first three slots guarantee the required Entity, State and final Decision.
    if (i == 0) {
      node.kind = NodeKind::Entity;
    } else if (i == 1) {
      node.kind = NodeKind::State;
    } else if (i == 2) {
      node.kind = NodeKind::Decision;
    } else {
      node.kind = kAllNodeKinds[rng.below(kAllNodeKinds.size())];
    }
    const auto extra = rng.below(3);
    for (std::uint64_t a = 0; a < extra; ++a) node.attributes["k" + std::to_string(rng.below(5))] = random_value(rng);
    if (node.kind == NodeKind::Evidence) node.attributes[std::string(vocab::kValidity)] = pick(rng, vocab::validity_values());
    if (node.kind == NodeKind::Decision) {
      node.attributes[std::string(vocab::kFinal)] = (i == 2);
      node.attributes[std::string(vocab::kAction)] =
          std::string(to_string(i == 2 ? action : kAllActions[rng.below(kAllActions.size())]));
    }
    if (node.kind == NodeKind::State && rng.below(2) == 0) {
      node.attributes[std::string(vocab::kServiceStage)] = pick(rng, vocab::service_stages());
    }
    g.nodes.push_back(std::move(node));
  }

  // Timeline edges only run forward in node order, so precedes stays acyclic.
  const std::size_t m = rng.below(2 * n);
  for (std::size_t i = 0; i < m; ++i) {
    SkgEdge e;
    e.edge_id = "e" + std::to_string(i);
    const auto a = rng.below(n), b = rng.below(n);
    e.relation = kAllRelations[rng.below(kAllRelations.size())];
    e.src = g.nodes[a].node_id;
    e.dst = g.nodes[b].node_id;
    if (a == b && e.relation != RelationType::RefersTo) e.relation = RelationType::RefersTo;
    if (e.relation == RelationType::Precedes && a >= b) e.relation = RelationType::RefersTo;
    if ((e.relation == RelationType::Supports || e.relation == RelationType::Contradicts) &&
        g.nodes[a].kind != NodeKind::Evidence && g.nodes[a].kind != NodeKind::Event) {
      e.relation = RelationType::AppliesTo;
    }
    if (rng.below(4) == 0) e.attributes["w"] = random_value(rng);
    g.edges.push_back(std::move(e));
  }

  g.scene_dims[SceneDim::ComplaintType] = pick(rng, vocab::complaint_types());
  g.scene_dims[SceneDim::EvidenceQuality] = pick(rng, vocab::validity_values());
  g.scene_dims[SceneDim::ServiceStage] = pick(rng, vocab::service_stages());
  g.scene_dims[SceneDim::Responsibility] = pick(rng, vocab::parties());
  g.scene_dims[SceneDim::ResolutionAction] = std::string(to_string(action));
  stamp_couplings(g);
  return g;
}

}  // namespace skg::test

namespace skg::test {

namespace {

using nlohmann::json;

bool is_data_path(const std::string& p) {
  return p.find("/attributes/") != std::string::npos || p.rfind("/description/coverage/", 0) == 0;
}

void collect(const json& j, const json::json_pointer& at, std::vector<json::json_pointer>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      const auto p = at / k;
      if (!is_data_path(p.to_string())) out.push_back(p);
      collect(v, p, out);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) collect(j[i], at / i, out);
  }
}

std::string fence(const std::string& body) { return "Here is the bundle.\n```skg-bundle\n" + body + "\n```\n"; }

}  // namespace

Mutation mutate_payload(util::Rng& rng, const json& payload) {
  std::vector<json::json_pointer> keys;
  collect(payload, json::json_pointer(), keys);
  json m = payload;
  Mutation out;
  switch (rng.below(6)) {
    case 0: {
      const auto p = keys[rng.below(keys.size())];
      out.kind = "delete";
      out.where = p.to_string();
      m[p.parent_pointer()].erase(p.back());
      break;
    }
    case 1: {
      static const std::vector<std::string> enum_keys{"kind", "relation", "coupling", "subtask", "validity", "action"};
      std::vector<json::json_pointer> targets;
      for (const auto& p : keys) {
        const auto last = p.back();
        if (std::find(enum_keys.begin(), enum_keys.end(), last) != enum_keys.end() && m[p].is_string()) targets.push_back(p);
      }
      targets.push_back(json::json_pointer("/graph/scene_dims/resolution_action"));
      targets.push_back(json::json_pointer("/graph/schema_version"));
      const auto& nodes = m["graph"]["nodes"];
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i]["kind"] == "Evidence" || nodes[i]["kind"] == "Decision") {
          const std::string key = nodes[i]["kind"] == "Evidence" ? "validity" : "action";
          targets.push_back(json::json_pointer("/graph/nodes/" + std::to_string(i) + "/attributes/" + key));
        }
      }
      const auto p = targets[rng.below(targets.size())];
      out.kind = "enum";
      out.where = p.to_string();
      m[p] = "bogus-" + std::to_string(rng.below(1000));
      break;
    }
    case 2: {
      const auto p = keys[rng.below(keys.size())];
      out.kind = "type";
      out.where = p.to_string();
      auto& v = m[p];
      if (v.is_string()) {
        v = 42;
      } else if (v.is_number()) {
        v = "seven";
      } else if (v.is_array()) {
        v = json::object({{"x", 1}});
      } else if (v.is_object()) {
        v = json::array({1, 2});
      } else {
        v = "maybe";
      }
      break;
    }
    case 3: {
      const auto text = m.dump();
      const auto cut = 1 + rng.below(text.size() - 1);
      out.kind = "truncate";
      out.where = std::to_string(cut);
      out.raw = fence(text.substr(0, cut));
      return out;
    }
    case 4: {
      out.kind = "fence";
      if (rng.below(2) == 0) {
        out.where = "missing";
        out.raw = "I could not decide.\n" + m.dump();
      } else {
        out.where = "twice";
        out.raw = fence(m.dump()) + fence(m.dump());
      }
      return out;
    }
    default: {
      auto& edges = m["graph"]["edges"];
      const auto i = rng.below(edges.size());
      out.kind = "dangling";
      out.where = "/graph/edges/" + std::to_string(i) + "/dst";
      edges[i]["dst"] = "ghost-node";
      break;
    }
  }
  out.raw = fence(m.dump());
  return out;
}

}  // namespace skg::test

#include "skg/corpus/scene.hpp"
#include "skg/synth/mock.hpp"

namespace skg::test {

std::vector<corpus::FinalCase> make_finals(std::size_t n, std::uint64_t seed) {
  std::vector<corpus::FinalCase> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto c = corpus::synthetic_case(i, seed);
    auto b = synth::mock_bundle(c, false);
    out.push_back({std::move(c), std::move(b), {}});
  }
  return out;
}

}  // namespace skg::test

#include "skg/core/serialize.hpp"

#include <algorithm>

#include "skg/core/validate.hpp"
#include "skg/error.hpp"
#include "skg/util/digest.hpp"
#include "skg/util/json_reader.hpp"

namespace skg {

using util::ObjectReader;
using util::schema_error;

nlohmann::json node_to_json(const SkgNode& n) {
  return {{"node_id", n.node_id},
          {"kind", to_string(n.kind)},
          {"label", n.label},
          {"attributes", attrs_to_json(n.attributes)},
          {"coupling", to_string(n.coupling)}};
}

nlohmann::json edge_to_json(const SkgEdge& e) {
  return {{"edge_id", e.edge_id},
          {"src", e.src},
          {"dst", e.dst},
          {"relation", to_string(e.relation)},
          {"attributes", attrs_to_json(e.attributes)}};
}

nlohmann::json edit_op_to_json(const EditOp& op) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, edit::SetAttribute>) {
          return {{"op", "set_attribute"},
                  {"node_id", x.node_id},
                  {"key", x.key},
                  {"value", x.value ? value_to_json(*x.value) : nlohmann::json(nullptr)}};
        } else if constexpr (std::is_same_v<T, edit::AddNode>) {
          return {{"op", "add_node"}, {"node", node_to_json(x.node)}};
        } else if constexpr (std::is_same_v<T, edit::RemoveNode>) {
          return {{"op", "remove_node"}, {"node_id", x.node_id}};
        } else if constexpr (std::is_same_v<T, edit::AddEdge>) {
          return {{"op", "add_edge"}, {"edge", edge_to_json(x.edge)}};
        } else if constexpr (std::is_same_v<T, edit::RemoveEdge>) {
          return {{"op", "remove_edge"}, {"edge_id", x.edge_id}};
        } else {
          return {{"op", "set_dim"}, {"dim", to_string(x.dim)}, {"value", x.value}};
        }
      },
      op);
}

nlohmann::json edit_log_to_json(const EditLog& log) {
  auto out = nlohmann::json::array();
  for (const auto& op : log) out.push_back(edit_op_to_json(op));
  return out;
}

nlohmann::json graph_to_json(const SceneKnowledgeGraph& g) {
  std::vector<const SkgNode*> nodes;
  for (const auto& n : g.nodes) nodes.push_back(&n);
  std::sort(nodes.begin(), nodes.end(), [](auto* a, auto* b) { return a->node_id < b->node_id; });
  std::vector<const SkgEdge*> edges;
  for (const auto& e : g.edges) edges.push_back(&e);
  std::sort(edges.begin(), edges.end(), [](auto* a, auto* b) { return a->edge_id < b->edge_id; });

  auto jn = nlohmann::json::array();
  for (const auto* n : nodes) jn.push_back(node_to_json(*n));
  auto je = nlohmann::json::array();
  for (const auto* e : edges) je.push_back(edge_to_json(*e));
  auto dims = nlohmann::json::object();
  for (const auto& [d, v] : g.scene_dims) dims[std::string(to_string(d))] = v;

  nlohmann::json prov;
  if (const auto* gen = std::get_if<GeneralizedProvenance>(&g.provenance)) {
    prov = {{"kind", "generalized"}, {"parent_graph_id", gen->parent_graph_id}, {"edit_log", edit_log_to_json(gen->edit_log)}};
  } else {
    prov = {{"kind", "canonical"}};
  }
  return {{"schema_version", kSchemaVersion},
          {"graph_id", g.graph_id},
          {"base_case_id", g.base_case_id},
          {"provenance", prov},
          {"scene_dims", dims},
          {"nodes", jn},
          {"edges", je}};
}

SkgNode node_from_json(const nlohmann::json& j, const std::string& path) {
  ObjectReader r(j, path);
  SkgNode n;
  n.node_id = r.string("node_id");
  const auto kind = r.string("kind");
  const auto parsed_kind = parse_node_kind(kind);
  if (!parsed_kind) schema_error(r.child("kind"), "unknown node kind '" + kind + "'");
  n.kind = *parsed_kind;
  n.label = r.string("label");
  n.attributes = attrs_from_json(r.object("attributes"), r.child("attributes"));
  const auto coupling = r.string("coupling");
  const auto parsed_coupling = parse_coupling(coupling);
  if (!parsed_coupling) schema_error(r.child("coupling"), "unknown coupling '" + coupling + "'");
  n.coupling = *parsed_coupling;
  r.finish();
  return n;
}

SkgEdge edge_from_json(const nlohmann::json& j, const std::string& path) {
  ObjectReader r(j, path);
  SkgEdge e;
  e.edge_id = r.string("edge_id");
  e.src = r.string("src");
  e.dst = r.string("dst");
  const auto relation = r.string("relation");
  const auto parsed = parse_relation(relation);
  if (!parsed) schema_error(r.child("relation"), "unknown relation '" + relation + "'");
  e.relation = *parsed;
  e.attributes = attrs_from_json(r.object("attributes"), r.child("attributes"));
  r.finish();
  return e;
}

namespace {

SceneDim dim_from(const std::string& name, const std::string& path) {
  const auto d = parse_scene_dim(name);
  if (!d) schema_error(path, "unknown scene dimension '" + name + "'");
  return *d;
}

EditOp edit_op_from_json(const nlohmann::json& j, const std::string& path) {
  ObjectReader r(j, path);
  const auto op = r.string("op");
  EditOp out;
  if (op == "set_attribute") {
    edit::SetAttribute e;
    e.node_id = r.string("node_id");
    e.key = r.nonempty("key");
    const auto& v = r.required("value");
    if (!v.is_null()) e.value = value_from_json(v, r.child("value"));
    out = std::move(e);
  } else if (op == "add_node") {
    out = edit::AddNode{node_from_json(r.required("node"), r.child("node"))};
  } else if (op == "remove_node") {
    out = edit::RemoveNode{r.string("node_id")};
  } else if (op == "add_edge") {
    out = edit::AddEdge{edge_from_json(r.required("edge"), r.child("edge"))};
  } else if (op == "remove_edge") {
    out = edit::RemoveEdge{r.string("edge_id")};
  } else if (op == "set_dim") {
    out = edit::SetDim{dim_from(r.string("dim"), r.child("dim")), r.string("value")};
  } else {
    schema_error(r.child("op"), "unknown edit op '" + op + "'");
  }
  r.finish();
  return out;
}

}  // namespace

EditLog edit_log_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected array");
  EditLog log;
  for (std::size_t i = 0; i < j.size(); ++i) log.push_back(edit_op_from_json(j[i], path + "/" + std::to_string(i)));
  return log;
}

SceneKnowledgeGraph graph_from_json(const nlohmann::json& j, const std::string& path) {
  ObjectReader r(j, path);
  const auto& version = r.required("schema_version");
  if (!version.is_string()) schema_error(r.child("schema_version"), "expected string");
  if (version.get<std::string>() != kSchemaVersion) {
    throw Error(Errc::VersionError, "unsupported schema_version '" + version.get<std::string>() + "'",
                {{"path", r.child("schema_version")}});
  }
  SceneKnowledgeGraph g;
  g.graph_id = r.string("graph_id");
  g.base_case_id = r.string("base_case_id");

  ObjectReader pr(r.object("provenance"), r.child("provenance"));
  const auto kind = pr.string("kind");
  if (kind == "canonical") {
    g.provenance = CanonicalProvenance{};
  } else if (kind == "generalized") {
    GeneralizedProvenance gen;
    gen.parent_graph_id = pr.string("parent_graph_id");
    gen.edit_log = edit_log_from_json(pr.required("edit_log"), pr.child("edit_log"));
    g.provenance = std::move(gen);
  } else {
    schema_error(pr.child("kind"), "unknown provenance kind '" + kind + "'");
  }
  pr.finish();

  const auto& dims = r.object("scene_dims");
  for (const auto& [k, v] : dims.items()) {
    const auto p = r.child("scene_dims") + "/" + k;
    if (!v.is_string()) schema_error(p, "expected string");
    g.scene_dims[dim_from(k, p)] = v.get<std::string>();
  }
  const auto& nodes = r.array("nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    g.nodes.push_back(node_from_json(nodes[i], r.child("nodes") + "/" + std::to_string(i)));
  }
  const auto& edges = r.array("edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    g.edges.push_back(edge_from_json(edges[i], r.child("edges") + "/" + std::to_string(i)));
  }
  r.finish();
  return g;
}

std::string canonical_bytes(const SceneKnowledgeGraph& g) { return util::dump_canonical(graph_to_json(g)); }

std::string canonicalize(const SceneKnowledgeGraph& g) {
  const auto result = validate_graph(g);
  if (!result.ok()) {
    auto details = nlohmann::json::array();
    for (const auto& v : result.violations) details.push_back({{"code", v.code}, {"refs", v.refs}});
    throw Error(Errc::InvalidGraph, "graph " + g.graph_id + " fails validation (" + result.violations.front().code + ")",
                {{"violations", details}});
  }
  return canonical_bytes(g);
}

bool canonically_equal(const SceneKnowledgeGraph& a, const SceneKnowledgeGraph& b) {
  return canonical_bytes(a) == canonical_bytes(b);
}

std::string graph_digest(const SceneKnowledgeGraph& g) { return util::sha256_hex(canonical_bytes(g)); }

SceneKnowledgeGraph parse_graph(std::string_view bytes) { return graph_from_json(util::parse_json(bytes)); }

}  // namespace skg

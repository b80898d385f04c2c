#include <doctest.h>

#include <algorithm>
#include <set>

#include "skg/core/diff.hpp"
#include "skg/core/serialize.hpp"
#include "skg/core/validate.hpp"
#include "skg/error.hpp"
#include "skg/util/digest.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/text.hpp"
#include "support.hpp"

using namespace skg;

namespace {

SceneKnowledgeGraph refund_fixture() { return test::load_graph(test::fixture_path("canonical_refund.input.skg")); }

template <typename F>
Error capture(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected skg::Error");
  return Error(Errc::Io, "unreachable");
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("validate flags dangling endpoints by edge id") {
  auto g = refund_fixture();
  g.edges.push_back({"e-ghost", "dec-final", "nobody", RelationType::RefersTo, {}});
  const auto r = validate_graph(g);
  REQUIRE(r.has("dangling-endpoint"));
  const auto it = std::find_if(r.violations.begin(), r.violations.end(),
                               [](const auto& v) { return v.code == "dangling-endpoint"; });
  CHECK(it->refs == std::vector<std::string>{"e-ghost"});
}

TEST_CASE("validate rejects two final decisions") {
  auto g = refund_fixture();
  auto second = *g.find_node("dec-final");
  second.node_id = "dec-other";
  g.nodes.push_back(second);
  CHECK(validate_graph(g).has("multiple-final-decisions"));
}

TEST_CASE("hand-audited refund fixture validates") {
  const auto r = validate_graph(refund_fixture());
  CHECK(r.ok());
}

TEST_CASE("precedes cycles are structural violations") {
  auto g = refund_fixture();
  g.edges.push_back({"t-back", "evt-complaint", "evt-delivered", RelationType::Precedes, {}});
  CHECK(validate_graph(g).has("precedes-cycle"));
}

TEST_CASE("stored coupling must match the taxonomy") {
  auto g = refund_fixture();
  g.find_node("pol-P-refund")->coupling = CouplingClass::Weak;
  CHECK(validate_graph(g).has("coupling-mismatch"));
  CHECK(capture([&] { partition_nodes(g); }).code() == Errc::CouplingMismatch);
}

TEST_CASE("canonical bytes ignore node order") {
  auto a = refund_fixture();
  auto b = a;
  std::reverse(b.nodes.begin(), b.nodes.end());
  std::reverse(b.edges.begin(), b.edges.end());
  CHECK(canonicalize(a) == canonicalize(b));
}

TEST_CASE("canonical bytes and digest match the frozen goldens") {
  const auto golden = util::read_file(test::fixture_path("canonical_refund.golden.skg").string());
  const auto digest = util::trim(util::read_file(test::fixture_path("canonical_refund.sha256").string()));
  const auto g = refund_fixture();
  CHECK(canonicalize(g) == golden);
  CHECK(graph_digest(g) == digest);
}

TEST_CASE("canonicalize refuses invalid graphs") {
  auto g = refund_fixture();
  g.scene_dims.erase(SceneDim::ServiceStage);
  const auto e = capture([&] { canonicalize(g); });
  CHECK(e.code() == Errc::InvalidGraph);
}

TEST_CASE("parse inverts canonicalize") {
  const auto g = refund_fixture();
  const auto back = parse_graph(canonicalize(g));
  CHECK(canonically_equal(back, g));
  CHECK(canonicalize(back) == canonicalize(g));
}

TEST_CASE("unknown relation is a schema error at the edge path") {
  auto j = nlohmann::json::parse(canonicalize(refund_fixture()));
  j["edges"][2]["relation"] = "owns";
  const auto e = capture([&] { parse_graph(j.dump()); });
  CHECK(e.code() == Errc::SchemaError);
  CHECK(e.details().dump().find("/edges/2") != std::string::npos);
}

TEST_CASE("syntax errors carry a byte offset") {
  const auto e = capture([] { parse_graph(R"({"graph_id": )"); });
  CHECK(e.code() == Errc::SyntaxError);
  CHECK(e.details().contains("offset"));
}

TEST_CASE("unsupported schema version") {
  auto j = nlohmann::json::parse(canonicalize(refund_fixture()));
  j["schema_version"] = "9";
  CHECK(capture([&] { parse_graph(j.dump()); }).code() == Errc::VersionError);
}

TEST_CASE("random graphs round-trip byte-identically") {
  util::Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto g = test::random_graph(rng, "rg-" + std::to_string(i));
    REQUIRE(validate_graph(g).ok());
    const auto bytes = canonicalize(g);
    CHECK(canonicalize(parse_graph(bytes)) == bytes);
  }
}

TEST_CASE("typed values keep their kind through serialization") {
  CHECK(Decimal::parse("12.50") == Decimal::parse("12.5"));
  CHECK(Decimal::parse("12.50")->to_string() == "12.5");
  CHECK(Timestamp::parse("2024-03-01T12:00:00Z")->to_string() == "2024-03-01T12:00:00Z");
  util::Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto v = test::random_value(rng);
    CHECK(value_from_json(value_to_json(v), "/v") == v);
  }
}

TEST_CASE("diff of a graph with itself is empty") {
  const auto g = refund_fixture();
  CHECK(diff_graphs(g, g).empty());
}

TEST_CASE("one changed attribute diffs to one SetAttribute") {
  const auto a = refund_fixture();
  auto b = a;
  b.find_node("ent-merchant")->attributes["role"] = Value("carrier");
  const auto log = diff_graphs(a, b);
  REQUIRE(log.size() == 1);
  const auto* set = std::get_if<edit::SetAttribute>(&log.front());
  REQUIRE(set != nullptr);
  CHECK(set->node_id == "ent-merchant");
  CHECK(set->key == "role");
}

TEST_CASE("apply after diff reproduces the target over a shared id space") {
  util::Rng rng(21);
  test::RandomGraphOptions opts{.max_nodes = 10, .id_pool = 12};
  for (int i = 0; i < 300; ++i) {
    const auto a = test::random_graph(rng, "pair", opts);
    const auto b = test::random_graph(rng, "pair", opts);
    const auto log = diff_graphs(a, b);
    const auto applied = apply_edits(a, log);
    CHECK(canonical_bytes(applied) == canonical_bytes(b));
  }
}

TEST_CASE("edit logs round-trip through JSON") {
  util::Rng rng(3);
  const auto a = test::random_graph(rng, "x");
  const auto b = test::random_graph(rng, "x");
  const auto log = diff_graphs(a, b);
  CHECK(edit_log_from_json(edit_log_to_json(log), "") == log);
}

TEST_CASE("policy nodes are strong, stylistic entities weak") {
  auto g = refund_fixture();
  g.nodes.push_back({"ent-style", NodeKind::Entity, "Tone", {{"stylistic_note", Value("polite")}}, CouplingClass::Weak});
  const auto classes = classify_nodes(g);
  CHECK(classes.at("pol-P-refund") == CouplingClass::Strong);
  CHECK(classes.at("ent-style") == CouplingClass::Weak);
}

TEST_CASE("partition covers every node exactly once") {
  util::Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto g = test::random_graph(rng, "p");
    const auto part = partition_nodes(g);
    std::set<std::string> all;
    for (const auto& n : g.nodes) all.insert(n.node_id);
    std::set<std::string> both;
    std::set_intersection(part.strong.begin(), part.strong.end(), part.weak.begin(), part.weak.end(),
                          std::inserter(both, both.end()));
    CHECK(both.empty());
    std::set<std::string> uni = part.strong;
    uni.insert(part.weak.begin(), part.weak.end());
    CHECK(uni == all);
  }
}

TEST_CASE("fixture cases round-trip canonically") {
  for (const auto& c : test::fixture_cases()) {
    CHECK(validate_case(c).empty());
    const auto bytes = canonicalize_case(c);
    CHECK(parse_case(bytes) == c);
    CHECK(canonicalize_case(parse_case(bytes)) == bytes);
  }
}

TEST_CASE("sha256 matches a published test vector") {
  CHECK(util::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("canonical json rejects invalid utf-8") {
  nlohmann::json j = std::string("\xff\xfe");
  CHECK(capture([&] { util::dump_canonical(j); }).code() == Errc::SchemaError);
}

}

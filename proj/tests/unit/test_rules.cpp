#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "skg/core/diff.hpp"
#include "skg/core/serialize.hpp"
#include "skg/core/validate.hpp"
#include "skg/core/vocab.hpp"
#include "skg/error.hpp"
#include "skg/eval/metrics.hpp"
#include "skg/rules/evaluate.hpp"
#include "skg/rules/generalize.hpp"
#include "skg/rules/parser.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/text.hpp"
#include "support.hpp"

using namespace skg;
using namespace skg::rules;

namespace {

constexpr std::string_view kR1 =
    "RULE r1 blocking: IF decision = Refund THEN evidence(validity = sufficient) AND policy(applies = true)";

SceneKnowledgeGraph refund_fixture() { return test::load_graph(test::fixture_path("canonical_refund.input.skg")); }

ConstraintSet corpus_rules() { return parse_rules(util::read_file(test::fixture_path("rules_corpus.skgr").string())); }

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected skg::Error");
  return Errc::Io;
}

// Independent reference semantics: every atom is an existence claim, checked
// by scanning all candidate nodes or edges; values compare as long doubles,
// seconds or strings.
struct Oracle {
  const SceneKnowledgeGraph& g;

  static std::optional<long double> number(const Value& v) {
    if (v.is_integer()) return static_cast<long double>(v.as_integer());
    if (v.is_decimal()) return static_cast<long double>(v.as_decimal().mantissa()) /
                               std::pow(10.0L, v.as_decimal().scale());
    return std::nullopt;
  }

  // -1, 0, 1, or 2 for "no order".
  static int order(const Value& a, const Value& b) {
    const auto x = number(a), y = number(b);
    if (x && y) return *x < *y ? -1 : (*x > *y ? 1 : 0);
    if (a.is_timestamp() && b.is_timestamp()) {
      return a.as_timestamp().seconds < b.as_timestamp().seconds ? -1 : (a.as_timestamp().seconds > b.as_timestamp().seconds);
    }
    if (a.is_string() && b.is_string()) return a.as_string() < b.as_string() ? -1 : (a.as_string() > b.as_string());
    if (a.is_bool() && b.is_bool()) return a.as_bool() == b.as_bool() ? 0 : 2;
    return 2;
  }

  static bool test(const Value& v, Comparator cmp, const Literal& lit) {
    const int o = order(v, lit.values.front());
    switch (cmp) {
      case Comparator::Eq: return o == 0;
      case Comparator::Ne: return o != 0;
      case Comparator::Lt: return o == -1;
      case Comparator::Le: return o == -1 || o == 0;
      case Comparator::Gt: return o == 1;
      case Comparator::Ge: return o == 1 || o == 0;
      case Comparator::In:
        for (const auto& x : lit.values) {
          if (order(v, x) == 0) return true;
        }
        return false;
    }
    return false;
  }

  bool atom(const Atom& a) const {
    if (const auto* n = std::get_if<NodeAttrIs>(&a)) {
      for (const auto& node : g.nodes) {
        if (node.kind != n->kind) continue;
        const auto it = node.attributes.find(n->key);
        if (it != node.attributes.end() && test(it->second, n->cmp, n->value)) return true;
      }
      return false;
    }
    if (const auto* e = std::get_if<EdgeExists>(&a)) {
      for (const auto& edge : g.edges) {
        if (edge.relation != e->relation) continue;
        const auto* s = g.find_node(edge.src);
        const auto* d = g.find_node(edge.dst);
        if (s && d && s->kind == e->src_kind && d->kind == e->dst_kind) return true;
      }
      return false;
    }
    if (const auto* d = std::get_if<DecisionIs>(&a)) {
      std::vector<const SkgNode*> finals;
      for (const auto& node : g.nodes) {
        if (node.kind == NodeKind::Decision && node.attributes.count("final") &&
            node.attributes.at("final") == Value(true)) {
          finals.push_back(&node);
        }
      }
      if (finals.size() != 1) return false;
      const auto action = parse_action(finals.front()->attributes.at("action").as_string());
      const bool listed = std::count(d->actions.begin(), d->actions.end(), *action) > 0;
      return d->cmp == Comparator::Ne ? !listed : listed;
    }
    const auto& dim = std::get<DimIs>(a);
    const auto it = g.scene_dims.find(dim.dim);
    return it != g.scene_dims.end() && test(Value(it->second), dim.cmp, dim.value);
  }

  bool expr(const Expr& e) const {
    switch (e.op) {
      case Expr::Op::Atom: return atom(*e.atom) != e.negated;
      case Expr::Op::And:
        return std::all_of(e.children.begin(), e.children.end(), [&](const Expr& c) { return expr(c); });
      case Expr::Op::Or:
        return std::any_of(e.children.begin(), e.children.end(), [&](const Expr& c) { return expr(c); });
    }
    return false;
  }

  std::vector<std::string> violated(const ConstraintSet& set) const {
    std::vector<std::string> out;
    for (const auto& r : set.rules) {
      if (expr(r.antecedent) && !expr(r.consequent)) out.push_back(r.rule_id);
    }
    return out;
  }
};

// Random graph whose attributes speak the vocabulary the rules test.
SceneKnowledgeGraph rule_graph(util::Rng& rng, int i) {
  auto g = test::random_graph(rng, "rule-" + std::to_string(i), {.max_nodes = 12, .id_pool = 12});
  const auto pick = [&](const std::vector<std::string>& v) { return v[rng.below(v.size())]; };
  for (auto& n : g.nodes) {
    auto& a = n.attributes;
    switch (n.kind) {
      case NodeKind::Evidence:
        if (rng.below(2)) a["medium"] = pick({"screenshot", "photo", "document", "chat_export"});
        break;
      case NodeKind::Policy:
        if (rng.below(4)) a["applies"] = rng.below(2) == 0;
        if (rng.below(2)) a["clause_id"] = pick({"P-refund", "P-return", "P-other"});
        break;
      case NodeKind::Event:
        if (rng.below(3)) a["stage"] = pick(vocab::service_stages());
        if (rng.below(2)) a["timestamp"] = Timestamp{1'500'000'000 + static_cast<std::int64_t>(rng.below(500'000'000))};
        break;
      case NodeKind::State:
        if (rng.below(2)) a["refund_amount"] = Decimal(static_cast<std::int64_t>(rng.below(200000)), 2);
        if (rng.below(3) == 0) a["refund_amount"] = static_cast<std::int64_t>(rng.below(2000));
        if (rng.below(2)) a["order_status"] = pick({"cancelled", "shipped", "delivered"});
        if (rng.below(3) == 0) a["merchant_response"] = pick({"refused", "accepted"});
        if (rng.below(2)) a["priority"] = static_cast<std::int64_t>(rng.below(6));
        if (rng.below(5) == 0) a["priority"] = "3";
        if (rng.below(3) == 0) a["score"] = static_cast<std::int64_t>(rng.below(30)) - 15;
        break;
      case NodeKind::Entity:
        if (rng.below(2)) a["role"] = pick({"carrier", "merchant", "user", "agent", "customer service"});
        if (rng.below(3) == 0) a["vip"] = rng.below(2) == 0;
        break;
      case NodeKind::Decision:
        break;
    }
  }
  return g;
}

}  // namespace

TEST_SUITE("rules") {

TEST_CASE("single rule parses") {
  const auto set = parse_rules(kR1);
  REQUIRE(set.rules.size() == 1);
  CHECK(set.rules[0].rule_id == "r1");
  CHECK(set.rules[0].severity == Severity::Blocking);
}

TEST_CASE("parsing is deterministic") { CHECK(parse_rules(kR1) == parse_rules(kR1)); }

TEST_CASE("hand-written corpus reaches a print/parse fixed point") {
  const auto first = corpus_rules();
  REQUIRE(first.rules.size() == 50);
  const auto printed = print_rules(first);
  const auto second = parse_rules(printed);
  CHECK(second == first);
  CHECK(print_rules(second) == printed);
}

TEST_CASE("comments above a rule become its description") {
  const auto set = parse_rules("# why\n# more\nRULE a advisory: IF decision = Refund THEN decision = Refund\n");
  CHECK(set.rules[0].description == "why\nmore");
}

TEST_CASE("parse errors are typed with positions") {
  Error caught(Errc::Io, "");
  try {
    parse_rules("RULE a blocking:\n  IF decision = Refund THEN evidence(validity sufficient)");
  } catch (const Error& e) {
    caught = e;
  }
  CHECK(caught.code() == Errc::SyntaxError);
  CHECK(caught.details().at("line") == 2);
  CHECK(code_of([] { parse_rules(std::string(kR1) + "\n" + std::string(kR1)); }) == Errc::DuplicateRuleId);
  CHECK(code_of([] { parse_rules("RULE a blocking: IF decision = Lunch THEN decision = Refund"); }) == Errc::TypeError);
  CHECK(code_of([] { parse_rules("RULE a blocking: IF state(x in 3) THEN decision = Refund"); }) == Errc::TypeError);
  CHECK(code_of([] { parse_rules("RULE a blocking: IF state(x < abc) THEN decision = Refund"); }) == Errc::TypeError);
  CHECK(code_of([] { parse_rules("RULE a blocking: IF edge(owns, decision, entity) THEN decision = Refund"); }) ==
        Errc::TypeError);
}

TEST_CASE("refund with only insufficient evidence violates r1") {
  auto g = refund_fixture();
  g.find_node("ev-receipt")->attributes["validity"] = Value("insufficient");
  const auto v = evaluate(g, parse_rules(kR1));
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule_id == "r1");
  CHECK(v[0].severity == Severity::Blocking);
  CHECK(v[0].refs == std::vector<std::string>{"dec-final"});
  CHECK_FALSE(is_consistent(g, parse_rules(kR1)));
}

TEST_CASE("empty rule set is vacuously satisfied") {
  util::Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto g = test::random_graph(rng, "v");
    CHECK(evaluate(g, {}).empty());
    CHECK(is_consistent(g, {}));
  }
}

TEST_CASE("advisory violations do not break consistency") {
  auto g = refund_fixture();
  CHECK(is_consistent(g, test::default_rules()));
  g.scene_dims[SceneDim::EvidenceQuality] = "contested";
  const auto v = evaluate(g, test::default_rules());
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule_id == "contested_needs_review");
  CHECK(is_consistent(g, test::default_rules()));
}

TEST_CASE("evaluate agrees with exhaustive reference evaluation") {
  const auto set = corpus_rules().merged_with(test::default_rules());
  util::Rng rng(404);
  std::size_t fired = 0;
  for (int i = 0; i < 1500; ++i) {
    const auto g = rule_graph(rng, i);
    REQUIRE(g.nodes.size() <= 12);
    std::vector<std::string> got;
    for (const auto& v : evaluate(g, set)) got.push_back(v.rule_id);
    const auto want = Oracle{g}.violated(set);
    CHECK(got == want);
    fired += want.size();
    const bool blocking_free = std::none_of(want.begin(), want.end(), [&](const std::string& id) {
      return set.find(id)->severity == Severity::Blocking;
    });
    CHECK(is_consistent(g, set) == blocking_free);
  }
  CHECK(fired > 1500);  // the sweep exercises real violations
}

TEST_CASE("violations are monotone in the rule set") {
  const auto corpus = corpus_rules();
  ConstraintSet c1, c2;
  for (std::size_t i = 0; i < corpus.rules.size(); ++i) (i % 2 ? c1 : c2).rules.push_back(corpus.rules[i]);
  util::Rng rng(77);
  for (int i = 0; i < 300; ++i) {
    const auto g = rule_graph(rng, i);
    std::set<std::string> small, big;
    for (const auto& v : evaluate(g, c1)) small.insert(v.rule_id);
    for (const auto& v : evaluate(g, c1.merged_with(c2))) big.insert(v.rule_id);
    CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
  }
}

TEST_CASE("fixture suite matches the hand-evaluated consistency table") {
  const auto policy = parse_rules(util::read_file(test::fixture_path("pc/policy.skgr").string()));
  const auto table = util::parse_json(util::read_file(test::fixture_path("pc/table.json").string()));
  REQUIRE(table.at("rows").size() == 10);
  for (const auto& row : table.at("rows")) {
    const auto g = test::load_graph(test::fixture_path("graphs/" + row.at("graph").get<std::string>()));
    const auto action = parse_action(row.at("predicted").get<std::string>());
    REQUIRE(action);
    INFO(row.at("graph").get<std::string>());
    CHECK(is_consistent(eval::substitute_action(g, *action), policy) == row.at("consistent").get<bool>());
  }
}

TEST_CASE("closure leaves an already consistent edit alone") {
  const auto g = refund_fixture();
  const EditLog seed{edit::SetAttribute{"ent-merchant", "note", Value("called twice")}};
  CHECK(closure(g, test::default_rules(), seed) == seed);
}

TEST_CASE("closure sends an unsupported refund to manual review") {
  const auto g = refund_fixture();
  const EditLog seed{edit::SetAttribute{"ev-receipt", "validity", Value("insufficient")}};
  const auto r1 = parse_rules(kR1);
  const auto log = closure(g, r1, seed);
  const auto expected = EditOp{edit::SetAttribute{"dec-final", "action", Value("ManualReview")}};
  CHECK(std::find(log.begin(), log.end(), expected) != log.end());
  CHECK(is_consistent(apply_edits(g, log), r1));
}

TEST_CASE("moving the stage before delivery prunes the timeline") {
  const auto g = refund_fixture();
  const auto v = generalize(g, test::default_rules(), {EditTarget::ServiceStage, "pre_delivery", 1});
  CHECK(validate_graph(v.graph).ok());
  CHECK(is_consistent(v.graph, test::default_rules()));
  CHECK(v.graph.find_node("st-service")->attr_string("service_stage") == "pre_delivery");
  CHECK(v.graph.find_node("evt-delivered") == nullptr);
  CHECK(v.graph.final_action() != DecisionAction::Refund);
  CHECK(v.graph.dim(SceneDim::ServiceStage) == "pre_delivery");
  CHECK(canonically_equal(derive_variant(g, v.edit_log), v.graph));
}

TEST_CASE("generalize is deterministic") {
  const auto g = refund_fixture();
  const EditRequest req{EditTarget::ComplaintType, "damaged_item", 9};
  CHECK(canonicalize(generalize(g, test::default_rules(), req).graph) ==
        canonicalize(generalize(g, test::default_rules(), req).graph));
}

TEST_CASE("requesting the current value is rejected") {
  const auto g = refund_fixture();
  CHECK(code_of([&] { generalize(g, test::default_rules(), {EditTarget::ServiceStage, "post_delivery", 0}); }) ==
        Errc::IdenticalVariant);
}

TEST_CASE("generalize leaves weak nodes alone") {
  for (const auto& g : test::fixture_graphs()) {
    const auto requests = sample_edits(g, 6, 31);
    for (const auto& req : requests) {
      Variant v;
      try {
        v = generalize(g, test::default_rules(), req);
      } catch (const Error& e) {
        CHECK((e.code() == Errc::UnsatisfiableEdit || e.code() == Errc::IdenticalVariant));
        continue;
      }
      for (const auto& n : g.nodes) {
        if (n.coupling != CouplingClass::Weak) continue;
        const auto* after = v.graph.find_node(n.node_id);
        REQUIRE(after != nullptr);
        CHECK(after->kind == n.kind);
        CHECK(after->label == n.label);
        CHECK(after->attributes == n.attributes);
      }
    }
  }
}

TEST_CASE("sampler takes the only other value when that is all there is") {
  const auto g = refund_fixture();
  const std::array only{EditTarget::EventRelation};
  REQUIRE(admissible_values(g, EditTarget::EventRelation).size() == 1);
  const auto reqs = sample_edits(g, 1, 0, only);
  REQUIRE(reqs.size() == 1);
  CHECK(reqs[0].value == admissible_values(g, EditTarget::EventRelation)[0]);
  CHECK(code_of([&] { sample_edits(g, 2, 0, only); }) == Errc::InsufficientVariation);
}

TEST_CASE("sampled requests are pairwise distinct and avoid current values") {
  for (const auto& g : test::fixture_graphs()) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto reqs = sample_edits(g, 8, seed);
      std::set<std::pair<EditTarget, std::string>> seen;
      for (const auto& r : reqs) {
        CHECK(seen.insert({r.target, r.value}).second);
        const auto vals = admissible_values(g, r.target);
        CHECK(std::find(vals.begin(), vals.end(), r.value) != vals.end());
      }
      CHECK(sample_edits(g, 8, seed) == reqs);
    }
  }
}

TEST_CASE("first draw is uniform over editable targets") {
  const auto& g = test::fixture_graphs().front();
  std::vector<EditTarget> editable;
  for (auto t : kAllEditTargets) {
    if (!admissible_values(g, t).empty()) editable.push_back(t);
  }
  REQUIRE(editable.size() >= 3);
  std::map<EditTarget, int> counts;
  constexpr int kDraws = 10000;
  for (int s = 0; s < kDraws; ++s) ++counts[sample_edits(g, 1, static_cast<std::uint64_t>(s)).front().target];
  const double p = 1.0 / static_cast<double>(editable.size());
  const double sigma = std::sqrt(kDraws * p * (1 - p));
  double chi2 = 0;
  for (auto t : editable) {
    const double diff = counts[t] - kDraws * p;
    CHECK(std::abs(diff) <= 3 * sigma);
    chi2 += diff * diff / (kDraws * p);
  }
  // Mean of chi-square with k-1 dof plus three standard deviations.
  const double dof = static_cast<double>(editable.size() - 1);
  CHECK(chi2 <= dof + 3 * std::sqrt(2 * dof));
}

TEST_CASE("without_kind drops rules that mention the kind") {
  const auto filtered = without_kind(test::default_rules(), NodeKind::Policy);
  CHECK(filtered.find("refund_grounds") == nullptr);
  CHECK(filtered.find("no_reject_against_evidence") == nullptr);
  CHECK(filtered.find("transfer_target") != nullptr);
}

}

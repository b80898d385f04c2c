#include <doctest.h>

#include <cmath>
#include <set>

#include "skg/corpus/bench.hpp"
#include "skg/error.hpp"
#include "skg/eval/metrics.hpp"
#include "skg/eval/runner.hpp"
#include "skg/eval/split.hpp"
#include "skg/rules/parser.hpp"
#include "skg/synth/llm.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/text.hpp"
#include "support.hpp"

using namespace skg;
using namespace skg::eval;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected skg::Error");
  return Errc::Io;
}

std::vector<std::string> strs(std::initializer_list<const char*> xs) { return {xs.begin(), xs.end()}; }

// Reference macro-F1 from per-label confusion counts in doubles.
double reference_macro_f1(const std::vector<std::string>& p, const std::vector<std::string>& g,
                          const std::vector<std::string>& labels) {
  double sum = 0;
  for (const auto& l : labels) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] == l && g[i] == l) ++tp;
      if (p[i] == l && g[i] != l) ++fp;
      if (p[i] != l && g[i] == l) ++fn;
    }
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0;
    sum += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0;
  }
  return sum / static_cast<double>(labels.size());
}

struct Bench {
  std::vector<corpus::FinalCase> finals;
  std::vector<corpus::SceneItem> items;
  std::vector<corpus::BenchRecord> records;
  std::map<std::string, SceneKnowledgeGraph> graphs;

  GraphLookup lookup() const {
    return [this](const std::string& id) -> const SceneKnowledgeGraph* {
      const auto it = graphs.find(id);
      return it == graphs.end() ? nullptr : &it->second;
    };
  }
};

const Bench& bench() {
  static const Bench b = [] {
    Bench out;
    out.finals = test::make_finals(150, 21);
    corpus::BuildOptions opts;
    opts.seed = 2;
    opts.split_seed = 2;
    opts.rules = &test::default_rules();
    opts.variants_per_case = 2;
    out.items = corpus::expand_finals(out.finals, opts);
    out.records = corpus::build_text_bench(out.items, opts);
    const auto mm = corpus::build_mm_bench(out.finals, opts);
    out.records.insert(out.records.end(), mm.begin(), mm.end());
    for (const auto& it : out.items) out.graphs.emplace(it.graph->graph_id, *it.graph);
    return out;
  }();
  return b;
}

std::string gold_replay(const std::vector<corpus::BenchRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    const auto answer = r.qa ? r.qa->gold().label : *r.label;
    out += nlohmann::json{{"record_id", r.record_id}, {"answer", answer}}.dump() + "\n";
  }
  return out;
}

EvalOptions all_slices() {
  EvalOptions o;
  o.slices = {Slice::Full, Slice::Corrupt10, Slice::Corrupt30, Slice::Rare};
  o.eval_split = std::nullopt;
  o.workers = 3;
  return o;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("variants of one base share a split") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(assign_split("cfpb-42", {}, seed) == assign_split("cfpb-42", {}, seed));
  }
}

TEST_CASE("degenerate ratios always pick train") {
  for (int i = 0; i < 1000; ++i) CHECK(assign_split("b-" + std::to_string(i), {1, 0, 0}, 5) == Split::Train);
}

TEST_CASE("split proportions over 100k ids") {
  std::map<Split, int> n;
  for (int i = 0; i < 100000; ++i) ++n[assign_split("case-" + std::to_string(i), {}, 0)];
  CHECK(std::abs(n[Split::Train] / 1000.0 - 80.0) <= 0.5);
  CHECK(std::abs(n[Split::Dev] / 1000.0 - 10.0) <= 0.5);
  CHECK(std::abs(n[Split::Test] / 1000.0 - 10.0) <= 0.5);
}

TEST_CASE("ratios must be a distribution") {
  CHECK(code_of([] { check_ratios({0.5, 0.2, 0.2}); }) == Errc::OutOfRange);
  CHECK(code_of([] { check_ratios({1.2, -0.1, -0.1}); }) == Errc::OutOfRange);
}

TEST_CASE("identical predictions score 1") {
  const auto g = strs({"A", "B", "C", "A"});
  CHECK(accuracy(g, g) == 1);
  CHECK(macro_f1(g, g, strs({"A", "B", "C"})) == 1);
}

TEST_CASE("hand-computed macro-F1") {
  const auto golds = strs({"A", "A", "B", "B"});
  const auto preds = strs({"A", "B", "B", "B"});
  const auto f1 = macro_f1(preds, golds, strs({"A", "B"}));
  CHECK(f1 == Score(11, 15));
  CHECK(format_score(f1, 4) == "0.7333");
  CHECK(accuracy(preds, golds) == Score(3, 4));
}

TEST_CASE("macro-F1 matches a confusion-count reference and ignores order") {
  util::Rng rng(6);
  const auto labels = strs({"x", "y", "z", "w"});
  for (int t = 0; t < 200; ++t) {
    std::vector<std::string> p, g;
    const auto n = 1 + rng.below(40);
    for (std::uint64_t i = 0; i < n; ++i) {
      p.push_back(labels[rng.below(4)]);
      g.push_back(labels[rng.below(4)]);
    }
    const auto f = macro_f1(p, g, labels);
    CHECK(std::abs(to_double(f) - reference_macro_f1(p, g, labels)) < 1e-12);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(std::span(perm));
    std::vector<std::string> p2, g2;
    for (auto i : perm) {
      p2.push_back(p[i]);
      g2.push_back(g[i]);
    }
    auto l2 = labels;
    rng.shuffle(std::span(l2));
    CHECK(macro_f1(p2, g2, l2) == f);
  }
}

TEST_CASE("accuracy input errors") {
  CHECK(code_of([] { accuracy(strs({"a"}), strs({"a", "b"})); }) == Errc::LengthMismatch);
  CHECK(code_of([] { accuracy({}, {}); }) == Errc::EmptyInput);
}

TEST_CASE("reference score rows average correctly") {
  const auto avg = [](const char* a, const char* b, const char* c, bool mm) {
    return format_score(mm ? avg_mm(parse_score(a), parse_score(b), parse_score(c))
                           : avg_text(parse_score(a), parse_score(b), parse_score(c)));
  };
  CHECK(avg("68.95", "65.74", "79.75", false) == "71.48");
  CHECK(avg("80.55", "76.92", "92.31", false) == "83.26");
  CHECK(avg("74.31", "81.29", "86.03", true) == "80.54");
  CHECK(avg("79.26", "86.03", "88.16", true) == "84.48");
  CHECK(avg_text(parse_score("42.5"), parse_score("42.5"), parse_score("42.5")) == parse_score("42.5"));
  CHECK(avg_mm(0, 0, 0) == 0);
  CHECK(code_of([] { avg_text(101, 0, 0); }) == Errc::OutOfRange);
  CHECK(code_of([] { avg_mm(0, -1, 0); }) == Errc::OutOfRange);
}

TEST_CASE("score formatting rounds half up exactly") {
  CHECK(format_score(parse_score("71.475")) == "71.48");
  CHECK(format_score(parse_score("71.4749999")) == "71.47");
  CHECK(format_score(Score(2, 3), 4) == "0.6667");
  CHECK(format_score(Score(1), 2) == "1.00");
  CHECK(code_of([] { parse_score("7x"); }) == Errc::SyntaxError);
}

TEST_CASE("gold actions on sound graphs are fully consistent") {
  std::vector<PcItem> items;
  std::map<std::string, SceneKnowledgeGraph> graphs;
  for (const auto& g : test::fixture_graphs()) {
    graphs.emplace(g.graph_id, g);
    items.push_back({g.graph_id, g.final_action(), false});
  }
  const GraphLookup lookup = [&](const std::string& id) -> const SceneKnowledgeGraph* {
    return graphs.contains(id) ? &graphs.at(id) : nullptr;
  };
  CHECK(policy_consistency(items, lookup, test::default_rules()) == 1);
}

TEST_CASE("fixture predictions reproduce the hand table") {
  const auto policy = rules::parse_rules(util::read_file(test::fixture_path("pc/policy.skgr").string()));
  std::map<std::string, SceneKnowledgeGraph> graphs;
  for (const auto& g : test::fixture_graphs()) graphs.emplace(g.graph_id, g);
  const GraphLookup lookup = [&](const std::string& id) -> const SceneKnowledgeGraph* {
    return graphs.contains(id) ? &graphs.at(id) : nullptr;
  };
  std::vector<PcItem> five;
  for (const auto& doc : corpus::parse_jsonl(util::read_file(test::fixture_path("pc/predictions.jsonl").string()))) {
    five.push_back({doc.at("graph_id"), parse_action(doc.at("action").get<std::string>()), false});
  }
  REQUIRE(five.size() == 5);
  CHECK(policy_consistency(five, lookup, policy) == Score(3, 5));

  const auto table = util::parse_json(util::read_file(test::fixture_path("pc/table.json").string()));
  std::vector<PcItem> ten;
  int hand = 0;
  for (const auto& row : table.at("rows")) {
    const auto g = test::load_graph(test::fixture_path("graphs/" + row.at("graph").get<std::string>()));
    ten.push_back({g.graph_id, parse_action(row.at("predicted").get<std::string>()), false});
    hand += row.at("consistent").get<bool>() ? 1 : 0;
  }
  CHECK(policy_consistency(ten, lookup, policy) == Score(hand, 10));
  CHECK(hand == 5);

  // An abstention counts against consistency.
  five[0].abstained = true;
  five[0].action.reset();
  CHECK(policy_consistency(five, lookup, policy) == Score(2, 5));
}

TEST_CASE("policy consistency input errors") {
  const GraphLookup none = [](const std::string&) -> const SceneKnowledgeGraph* { return nullptr; };
  CHECK(code_of([&] { policy_consistency({}, none, test::default_rules()); }) == Errc::EmptyInput);
  std::vector<PcItem> missing{{"ghost", DecisionAction::Refund, false}};
  CHECK(code_of([&] { policy_consistency(missing, none, test::default_rules()); }) == Errc::GraphNotFound);
  const auto& g = test::fixture_graphs().front();
  const GraphLookup one = [&](const std::string&) { return &g; };
  std::vector<PcItem> no_action{{g.graph_id, std::nullopt, false}};
  CHECK(code_of([&] { policy_consistency(no_action, one, test::default_rules()); }) == Errc::MissingAction);
}

TEST_CASE("policy consistency stays in [0, 1]") {
  util::Rng rng(31);
  const auto& graphs = test::fixture_graphs();
  const GraphLookup lookup = [&](const std::string& id) -> const SceneKnowledgeGraph* {
    for (const auto& g : graphs) {
      if (g.graph_id == id) return &g;
    }
    return nullptr;
  };
  for (int t = 0; t < 100; ++t) {
    std::vector<PcItem> items;
    const auto n = 1 + rng.below(30);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto& g = graphs[rng.below(graphs.size())];
      items.push_back({g.graph_id, kAllActions[rng.below(kAllActions.size())], false});
    }
    const auto pc = policy_consistency(items, lookup, test::default_rules());
    CHECK(pc >= 0);
    CHECK(pc <= 1);
  }
}

TEST_CASE("rare filter definitions") {
  std::vector<TypedRecord> recs;
  for (int i = 0; i < 1000; ++i) recs.push_back({"common", true});
  recs.push_back({"rare", true});
  recs.push_back({"rare", false});
  recs.push_back({"unseen", false});
  recs.push_back({"common", false});
  const auto rare = rare_type_filter(recs);  // 0.005 * 1001 = 5.005 train records
  std::set<std::string> types;
  for (auto i : rare) types.insert(recs[i].complaint_type);
  CHECK(types == std::set<std::string>{"rare", "unseen"});
  std::set<std::string> strict;
  for (auto i : rare_type_filter(recs, 0.0)) strict.insert(recs[i].complaint_type);
  CHECK(strict == std::set<std::string>{"unseen"});
}

TEST_CASE("rare filter agrees with brute-force counting") {
  util::Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TypedRecord> recs;
    for (int i = 0; i < 1000; ++i) {
      // Skewed type frequencies so some fall under the threshold.
      const auto t = rng.below(100) < 90 ? rng.below(5) : 5 + rng.below(40);
      recs.push_back({"t" + std::to_string(t), rng.below(10) < 8});
    }
    const double threshold = 0.002 * (1 + trial % 5);
    std::size_t train = 0;
    for (const auto& r : recs) train += r.train ? 1 : 0;
    std::vector<std::size_t> want;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      std::size_t count = 0;
      for (const auto& r : recs) count += (r.train && r.complaint_type == recs[i].complaint_type) ? 1 : 0;
      if (count == 0 || static_cast<double>(count) < threshold * static_cast<double>(train)) want.push_back(i);
    }
    CHECK(rare_type_filter(recs, threshold) == want);
  }
}

TEST_CASE("answer extraction") {
  const std::vector<QAOption> opts{{"A", "Refund"}, {"B", "Transfer"}, {"C", "Reject"}, {"D", "ManualReview"}};
  CHECK(extract_option("B", opts) == 1u);
  CHECK(extract_option("(C) because the policy applies", opts) == 2u);
  CHECK(extract_option("D. ManualReview", opts) == 3u);
  CHECK(extract_option("I would pick transfer here", opts) == 1u);
  CHECK(extract_option("A refund", opts) == 0u);
  CHECK(extract_option("Absolutely no idea", opts) == std::nullopt);
  CHECK(extract_option("", opts) == std::nullopt);
  const auto labels = strs({"Debt collection", "Mortgage", "Debt"});
  CHECK(extract_label("mortgage", labels) == "Mortgage");
  CHECK(extract_label("It is about Debt collection.", labels) == "Debt collection");
  CHECK(extract_label("nothing", labels) == std::nullopt);
}

TEST_CASE("slice names") {
  CHECK(parse_slices("full,corrupt_30").size() == 2);
  CHECK(code_of([] { parse_slices("full,full"); }) == Errc::BadRequest);
  CHECK(code_of([] { parse_slices("noisy"); }) == Errc::BadRequest);
  CHECK(corruption_level(Slice::Corrupt10) == doctest::Approx(0.10));
}

TEST_CASE("all-gold replay scores perfectly on every slice") {
  const auto& b = bench();
  ReplayPredictor replay(gold_replay(b.records));
  const auto run = run_eval(b.records, replay, test::default_rules(), b.lookup(), all_slices());
  REQUIRE(run.reports.size() == 4);
  std::size_t full_n = 0;
  for (const auto& rep : run.reports) {
    INFO(to_string(rep.slice));
    for (const auto& [s, score] : rep.subtasks) CHECK(score.score == 1);
    if (rep.slice != Slice::Rare) {
      REQUIRE(rep.avg_text.has_value());
      CHECK(*rep.avg_text == 100);
      REQUIRE(rep.avg_mm.has_value());
      CHECK(*rep.avg_mm == 100);
      REQUIRE(rep.policy_consistency.has_value());
      CHECK(*rep.policy_consistency == 1);
    }
    if (rep.slice == Slice::Full) full_n = rep.records;
    if (rep.slice == Slice::Corrupt30 || rep.slice == Slice::Corrupt10) CHECK(rep.records == full_n);
  }
  CHECK(full_n == b.records.size());
}

TEST_CASE("aggregates recompute from subtask scores") {
  const auto& b = bench();
  // Answer A everywhere: imperfect but deterministic.
  std::string replay_text;
  for (const auto& r : b.records) replay_text += nlohmann::json{{"record_id", r.record_id}, {"answer", "A"}}.dump() + "\n";
  ReplayPredictor replay(replay_text);
  const auto run = run_eval(b.records, replay, test::default_rules(), b.lookup(), all_slices());
  for (const auto& rep : run.reports) {
    if (!rep.avg_text) continue;
    const auto pct = [&](Subtask s) { return rep.subtasks.at(s).score * 100; };
    CHECK(*rep.avg_text == avg_text(pct(Subtask::Evidence), pct(Subtask::Policy), pct(Subtask::Action)));
    CHECK(*rep.avg_mm == avg_mm(pct(Subtask::Routing), pct(Subtask::Responsibility), pct(Subtask::Resolution)));
    CHECK(*rep.avg_text < 100);
    std::size_t correct = 0, n = 0;
    for (const auto& [s, sc] : rep.subtasks) {
      correct += sc.correct;
      n += sc.n;
      if (!sc.macro) CHECK(sc.score == Score(sc.correct, sc.n));
    }
    CHECK(*rep.accuracy == Score(correct, n) * 100);
  }
}

TEST_CASE("replay reports are bit-identical across runs") {
  const auto& b = bench();
  const auto replay_text = gold_replay(b.records);
  std::string first_json, first_csv;
  for (int i = 0; i < 2; ++i) {
    ReplayPredictor replay(replay_text);
    auto opts = all_slices();
    opts.workers = 1 + static_cast<std::size_t>(i) * 5;
    const auto run = run_eval(b.records, replay, test::default_rules(), b.lookup(), opts);
    const auto json = util::dump_canonical(report_to_json(run.reports, eval_config(b.records, replay, opts)));
    const auto csv = report_to_csv(run.reports);
    if (i == 0) {
      first_json = json;
      first_csv = csv;
    } else {
      CHECK(json == first_json);
      CHECK(csv == first_csv);
    }
  }
  CHECK(first_csv.rfind("slice,subtask,n,correct,abstained,score,percent\n", 0) == 0);
}

TEST_CASE("predictions written out replay to the same report") {
  const auto& b = bench();
  ReplayPredictor replay(gold_replay(b.records));
  auto opts = all_slices();
  const auto run = run_eval(b.records, replay, test::default_rules(), b.lookup(), opts);
  ReplayPredictor again(predictions_to_jsonl(run, b.records));
  const auto rerun = run_eval(b.records, again, test::default_rules(), b.lookup(), opts);
  CHECK(report_to_csv(rerun.reports) == report_to_csv(run.reports));
}

TEST_CASE("a replay missing records is rejected") {
  const auto& b = bench();
  std::vector<corpus::BenchRecord> partial(b.records.begin(), b.records.begin() + 10);
  ReplayPredictor replay(gold_replay(partial));
  CHECK(code_of([&] { run_eval(b.records, replay, test::default_rules(), b.lookup(), all_slices()); }) ==
        Errc::ReplayMismatch);
}

TEST_CASE("transport failures become abstentions") {
  const auto& b = bench();
  std::vector<corpus::BenchRecord> few(b.records.begin(), b.records.begin() + 5);
  std::vector<synth::ScriptedLlmClient::Step> script(5, {"", Errc::TransportError});
  synth::ScriptedLlmClient client(script);
  ModelPredictor model(client, "m");
  EvalOptions opts;
  opts.eval_split = std::nullopt;
  opts.workers = 1;
  const auto run = run_eval(few, model, test::default_rules(), {}, opts);
  CHECK(run.reports[0].abstentions == 5);
  for (const auto& p : run.predictions.at(Slice::Full)) CHECK(p.abstained);
  for (const auto& r : client.requests()) CHECK(r.temperature == Decimal(0, 0));
}

TEST_CASE("default evaluation covers the test split only") {
  const auto& b = bench();
  ReplayPredictor replay(gold_replay(b.records));
  EvalOptions opts;
  opts.workers = 2;
  const auto run = run_eval(b.records, replay, test::default_rules(), b.lookup(), opts);
  const auto tests = std::count_if(b.records.begin(), b.records.end(),
                                   [](const auto& r) { return r.split == Split::Test; });
  CHECK(run.reports[0].records == static_cast<std::size_t>(tests));
}

}

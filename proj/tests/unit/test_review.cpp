#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include "skg/core/serialize.hpp"
#include "skg/error.hpp"
#include "skg/review/server.hpp"
#include "skg/review/service.hpp"
#include "skg/review/store.hpp"
#include "skg/synth/loop.hpp"
#include "skg/synth/mock.hpp"
#include "skg/synth/prompt.hpp"
#include "skg/util/digest.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/text.hpp"
#include "support.hpp"

using namespace skg;
using namespace skg::review;
using nlohmann::json;

namespace {

struct FakeClock {
  std::atomic<std::int64_t> seconds{1'700'000'000};
  Clock clock() {
    return [this] { return Timestamp{seconds.load()}; };
  }
};

Error catch_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected skg::Error");
  return Error(Errc::Io, "unreachable");
}

synth::LoopOutcome outcome_for(const ComplaintCase& c, std::size_t defect_rounds) {
  synth::SceneMockClient mock({{c.case_id, c}}, defect_rounds);
  const auto t = synth::templates_from(synth::load_templates(test::source_path("templates").string()));
  return synth::run_loop(c, t, test::default_rules(), {}, mock, {});
}

// A store, a service and one escalated case ready for review.
struct Fixture {
  test::TempDir dir;
  FakeClock time;
  Store store{dir.path() / "store", time.clock()};
  ReviewService service{store, test::default_rules(), {}, time.clock()};
  ComplaintCase c = test::fixture_cases().front();
  ReviewTask annot;

  Fixture() {
    auto t = service.ingest_outcome(c, outcome_for(c, 100));
    REQUIRE(t.has_value());
    annot = *t;
  }

  EditLog breaking_edit() const {
    const auto g = service.graph(annot.graph_id);
    EditLog log;
    for (const auto& n : g.nodes) {
      if (n.kind == NodeKind::Evidence) log.push_back(edit::SetAttribute{n.node_id, "validity", Value("insufficient")});
    }
    log.push_back(edit::SetAttribute{g.final_decision()->node_id, "action", Value("Refund")});
    log.push_back(edit::SetDim{SceneDim::ResolutionAction, "Refund"});
    return log;
  }

  EditLog harmless_edit() const {
    const auto g = service.graph(annot.graph_id);
    for (const auto& n : g.nodes) {
      if (n.kind == NodeKind::Entity) return {edit::SetAttribute{n.node_id, "reviewer_note", Value("checked")}};
    }
    FAIL("no entity");
    return {};
  }
};

Decision approve() { return {Decision::Kind::Approve, "", {}}; }

// Every record that names the graph, except its own record and case records.
std::vector<std::string> scan_keys(const Store& store, const ReviewService& service, const std::string& graph_id) {
  std::string own;
  for (const auto& e : store.entries()) {
    if (e.kind == RecordKind::Graph && e.meta.value("graph_id", "") == graph_id) own = e.key;
  }
  std::vector<std::string> keys;
  for (const auto& e : store.entries()) {
    if (e.kind == RecordKind::Case || e.key == own) continue;
    if (std::find(e.subjects.begin(), e.subjects.end(), graph_id) != e.subjects.end()) keys.push_back(e.key);
  }
  (void)service;
  return keys;
}

std::vector<std::string> trail_keys(const ReviewService& service, const std::string& graph_id) {
  std::vector<std::string> keys;
  for (const auto& e : service.audit_trail(graph_id)) keys.push_back(e.key);
  return keys;
}

}  // namespace

TEST_SUITE("review") {

TEST_CASE("store put is idempotent and get is byte exact") {
  test::TempDir dir;
  Store store(dir.path());
  const std::string payload = "{\"x\":\"\xc3\xa9\\n\"}";
  const auto k1 = store.put(RecordKind::Bench, payload);
  const auto k2 = store.put(RecordKind::Bench, payload);
  CHECK(k1 == k2);
  CHECK(k1 == util::sha256_hex(payload));
  CHECK(store.size() == 1);
  CHECK(store.get(k1).payload == payload);
  CHECK(catch_error([&] { store.get(std::string(64, '0')); }).code() == Errc::NotFound);
}

TEST_CASE("ten thousand records are all retrievable") {
  test::TempDir dir;
  Store store(dir.path());
  util::Rng rng(10000);
  std::map<std::string, std::string> written;
  for (int i = 0; i < 10000; ++i) {
    const auto payload = "{\"n\":" + std::to_string(i) + ",\"r\":" + std::to_string(rng.next()) + "}";
    written.emplace(store.put(RecordKind::Report, payload), payload);
  }
  CHECK(written.size() == 10000);
  CHECK(store.size() == 10000);
  for (const auto& [k, p] : written) CHECK(store.get(k).payload == p);
  Store reopened(dir.path());
  CHECK(reopened.size() == 10000);
}

TEST_CASE("tampered objects fail the digest check") {
  test::TempDir dir;
  Store store(dir.path());
  const auto key = store.put(RecordKind::Case, "{\"a\":1}");
  std::ofstream(store.object_path(key), std::ios::binary | std::ios::trunc) << "{\"a\":2}";
  CHECK(catch_error([&] { store.get(key); }).code() == Errc::DigestMismatch);
}

TEST_CASE("a torn index tail is dropped on reopen") {
  test::TempDir dir;
  {
    Store store(dir.path());
    store.put(RecordKind::Case, "{\"a\":1}");
    store.put(RecordKind::Case, "{\"a\":2}");
  }
  std::ofstream(dir.path() / "index.log", std::ios::app | std::ios::binary) << "{\"seq\":3,\"key\":\"ab";
  Store store(dir.path());
  CHECK(store.size() == 2);
  store.put(RecordKind::Case, "{\"a\":3}");
  Store again(dir.path());
  CHECK(again.size() == 3);
}

TEST_CASE("stored keys stay present and unchanged") {
  test::TempDir dir;
  Store store(dir.path());
  std::map<std::string, std::string> seen;
  for (int round = 0; round < 20; ++round) {
    for (int i = 0; i < 10; ++i) {
      const auto p = "{\"round\":" + std::to_string(round) + ",\"i\":" + std::to_string(i % 7) + "}";
      seen[store.put(RecordKind::Trace, p)] = p;
    }
    for (const auto& [k, p] : seen) REQUIRE(store.get(k).payload == p);
  }
}

TEST_CASE("assets are content addressed") {
  test::TempDir dir;
  Store store(dir.path());
  const auto h = store.put_asset("png bytes");
  CHECK(h == util::sha256_hex("png bytes"));
  CHECK(store.get_asset(h) == "png bytes");
  CHECK(store.get_asset(std::string(64, 'f')) == std::nullopt);
}

TEST_CASE("escalation enqueues an annotator task") {
  Fixture f;
  CHECK(f.annot.stage == ReviewStage::Annotator);
  CHECK(f.annot.status == TaskStatus::Pending);
  CHECK(f.annot.case_id == f.c.case_id);
  // Re-ingesting the same outcome finds the open task.
  CHECK(f.service.ingest_outcome(f.c, outcome_for(f.c, 100))->task_id == f.annot.task_id);
}

TEST_CASE("finals are not queued unless reviewing everything") {
  Fixture f;
  const auto& c = test::fixture_cases()[1];
  CHECK_FALSE(f.service.ingest_outcome(c, outcome_for(c, 0)).has_value());
  ReviewService all(f.store, test::default_rules(), {.lease = std::chrono::minutes(60), .mode = ReviewMode::All},
                    f.time.clock());
  const auto& d = test::fixture_cases()[2];
  CHECK(all.ingest_outcome(d, outcome_for(d, 0)).has_value());
}

TEST_CASE("senior before annotator approval is out of order") {
  Fixture f;
  CHECK(catch_error([&] { f.service.enqueue_task(f.c.case_id, f.annot.graph_id, ReviewStage::Senior); }).code() ==
        Errc::StageOrderViolation);
}

TEST_CASE("double enqueue is a duplicate") {
  Fixture f;
  CHECK(catch_error([&] { f.service.enqueue_task(f.c.case_id, f.annot.graph_id, ReviewStage::Annotator); }).code() ==
        Errc::DuplicateTask);
  CHECK(catch_error([&] { f.service.enqueue_task(f.c.case_id, "g-nope", ReviewStage::Annotator); }).code() ==
        Errc::NotFound);
}

TEST_CASE("approval moves the thread to the senior stage") {
  Fixture f;
  f.service.claim_task(f.annot.task_id, "annie");
  const auto done = f.service.submit_decision(f.annot.task_id, "annie", approve());
  CHECK(done.status == TaskStatus::Approved);
  const auto seniors = f.service.list_tasks(ReviewStage::Senior, TaskStatus::Pending);
  REQUIRE(seniors.size() == 1);
  CHECK(seniors[0].graph_id == f.annot.graph_id);
}

TEST_CASE("claims are exclusive") {
  Fixture f;
  f.service.claim_task(f.annot.task_id, "annie");
  CHECK(catch_error([&] { f.service.claim_task(f.annot.task_id, "bob"); }).code() == Errc::WrongState);
  CHECK(catch_error([&] { f.service.submit_decision(f.annot.task_id, "bob", approve()); }).code() ==
        Errc::WrongReviewer);
}

TEST_CASE("racing claimers: exactly one wins") {
  Fixture f;
  std::atomic<int> wins{0}, losses{0};
  {
    std::vector<std::jthread> threads;
    for (int i = 0; i < 16; ++i) {
      threads.emplace_back([&, i] {
        try {
          f.service.claim_task(f.annot.task_id, "r" + std::to_string(i));
          ++wins;
        } catch (const Error& e) {
          if (e.code() == Errc::WrongState) ++losses;
        }
      });
    }
  }
  CHECK(wins == 1);
  CHECK(losses == 15);
}

TEST_CASE("submitting needs a claim and a rejection needs a note") {
  Fixture f;
  CHECK(catch_error([&] { f.service.submit_decision(f.annot.task_id, "annie", approve()); }).code() ==
        Errc::WrongState);
  f.service.claim_task(f.annot.task_id, "annie");
  CHECK(catch_error([&] {
          f.service.submit_decision(f.annot.task_id, "annie", {Decision::Kind::Reject, "", {}});
        }).code() == Errc::BadRequest);
  const auto t = f.service.submit_decision(f.annot.task_id, "annie", {Decision::Kind::Reject, "wrong case", {}});
  CHECK(t.status == TaskStatus::Rejected);
  CHECK(f.service.list_tasks(ReviewStage::Senior).empty());
  CHECK(catch_error([&] { f.service.claim_task(f.annot.task_id, "annie"); }).code() == Errc::WrongState);
}

TEST_CASE("an edit that breaks a blocking rule is refused with violations") {
  Fixture f;
  f.service.claim_task(f.annot.task_id, "annie");
  const auto e = catch_error([&] {
    f.service.submit_decision(f.annot.task_id, "annie", {Decision::Kind::Edit, "", f.breaking_edit()});
  });
  CHECK(e.code() == Errc::InvalidEdit);
  const auto& v = e.details().at("violations");
  CHECK(std::any_of(v.begin(), v.end(), [](const json& x) { return x.at("rule_id") == "refund_grounds"; }));
  CHECK(f.service.task(f.annot.task_id).status == TaskStatus::Claimed);
}

TEST_CASE("a valid edit stores a derived graph") {
  Fixture f;
  f.service.claim_task(f.annot.task_id, "annie");
  const auto t = f.service.submit_decision(f.annot.task_id, "annie", {Decision::Kind::Edit, "note", f.harmless_edit()});
  CHECK(t.status == TaskStatus::Edited);
  REQUIRE(t.result_graph_id.has_value());
  const auto g = f.service.graph(*t.result_graph_id);
  CHECK(g.is_generalized());
  CHECK(std::get<GeneralizedProvenance>(g.provenance).parent_graph_id == f.annot.graph_id);
  const auto senior = f.service.list_tasks(ReviewStage::Senior);
  REQUIRE(senior.size() == 1);
  CHECK(senior[0].review_graph_id == *t.result_graph_id);
}

TEST_CASE("expired leases return tasks to the queue") {
  Fixture f;
  f.service.claim_task(f.annot.task_id, "annie");
  f.time.seconds += 61 * 60;
  CHECK(f.service.task(f.annot.task_id).status == TaskStatus::Pending);
  CHECK(f.service.claim_task(f.annot.task_id, "bob").reviewer_id == "bob");
}

TEST_CASE("only the listed transitions are admitted") {
  // From each reachable status, try every operation; compare with the table.
  for (int op = 0; op < 4; ++op) {
    for (int prefix = 0; prefix < 3; ++prefix) {
      Fixture f;
      const auto id = f.annot.task_id;
      if (prefix >= 1) f.service.claim_task(id, "annie");
      if (prefix >= 2) f.service.submit_decision(id, "annie", approve());
      const auto before = f.service.task(id).status;
      bool ok = true;
      try {
        switch (op) {
          case 0: f.service.claim_task(id, "annie"); break;
          case 1: f.service.submit_decision(id, "annie", approve()); break;
          case 2: f.service.submit_decision(id, "annie", {Decision::Kind::Reject, "n", {}}); break;
          case 3: f.service.submit_decision(id, "annie", {Decision::Kind::Edit, "n", f.harmless_edit()}); break;
        }
      } catch (const Error& e) {
        ok = false;
        CHECK(e.code() == Errc::WrongState);
      }
      const bool allowed = (before == TaskStatus::Pending && op == 0) || (before == TaskStatus::Claimed && op > 0);
      CHECK(ok == allowed);
      if (!ok) CHECK(f.service.task(id).status == before);
    }
  }
}

TEST_CASE("fresh graph audit shows only its trace") {
  Fixture f;
  const auto& c = test::fixture_cases()[3];
  const auto out = outcome_for(c, 0);
  f.service.ingest_outcome(c, out);
  const auto trail = f.service.audit_trail(out.final->graph->graph_id);
  REQUIRE(trail.size() == 1);
  CHECK(trail[0].kind == RecordKind::Trace);
  CHECK(catch_error([&] { f.service.audit_trail("g-unknown"); }).code() == Errc::NotFound);
}

TEST_CASE("approve then senior edit: two tasks and one derived graph in order") {
  Fixture f;
  f.service.claim_task(f.annot.task_id, "annie");
  f.service.submit_decision(f.annot.task_id, "annie", approve());
  const auto senior = f.service.list_tasks(ReviewStage::Senior).front();
  f.service.claim_task(senior.task_id, "sam");
  const auto done = f.service.submit_decision(senior.task_id, "sam", {Decision::Kind::Edit, "tidy", f.harmless_edit()});
  const auto trail = f.service.audit_trail(f.annot.graph_id);
  CHECK(trail.front().kind == RecordKind::Trace);
  std::vector<std::string> task_order;
  std::size_t graphs = 0, graph_pos = 0, senior_first = 0;
  for (std::size_t i = 0; i < trail.size(); ++i) {
    if (trail[i].kind == RecordKind::Task) {
      const auto id = trail[i].meta.at("task_id").get<std::string>();
      if (std::find(task_order.begin(), task_order.end(), id) == task_order.end()) {
        task_order.push_back(id);
        if (id == senior.task_id) senior_first = i;
      }
    }
    if (trail[i].kind == RecordKind::Graph) {
      ++graphs;
      graph_pos = i;
    }
    if (i > 0) CHECK(trail[i - 1].seq < trail[i].seq);
  }
  CHECK(task_order == std::vector<std::string>{f.annot.task_id, senior.task_id});
  CHECK(graphs == 1);
  CHECK(graph_pos > senior_first);
  CHECK(trail.back().kind == RecordKind::Task);
  const auto finalized = f.service.list_finalized();
  CHECK(finalized == std::vector<std::string>{*done.result_graph_id});
}

TEST_CASE("audit trail equals a full store scan") {
  Fixture f;
  f.service.claim_task(f.annot.task_id, "annie");
  f.service.submit_decision(f.annot.task_id, "annie", {Decision::Kind::Edit, "", f.harmless_edit()});
  const auto edited = f.service.task(f.annot.task_id).result_graph_id.value();
  const auto senior = f.service.list_tasks(ReviewStage::Senior).front();
  f.service.claim_task(senior.task_id, "sam");
  f.service.submit_decision(senior.task_id, "sam", approve());
  for (const auto& id : {f.annot.graph_id, edited}) {
    CHECK(trail_keys(f.service, id) == scan_keys(f.store, f.service, id));
  }
  CHECK(f.service.list_finalized() == std::vector<std::string>{edited});
}

TEST_CASE("state survives a restart") {
  Fixture f;
  f.service.claim_task(f.annot.task_id, "annie");
  f.service.submit_decision(f.annot.task_id, "annie", approve());
  Store reopened(f.store.root(), f.time.clock());
  ReviewService again(reopened, test::default_rules(), {}, f.time.clock());
  CHECK(again.task(f.annot.task_id) == f.service.task(f.annot.task_id));
  CHECK(again.list_tasks() == f.service.list_tasks());
  const auto senior = again.list_tasks(ReviewStage::Senior).front();
  CHECK(again.claim_task(senior.task_id, "sam").status == TaskStatus::Claimed);
}

TEST_CASE("token table parsing") {
  const auto table = TokenTable::load(test::fixture_path("tokens.json").string());
  REQUIRE(table.find("tok-both") != nullptr);
  CHECK(table.find("tok-both")->roles.size() == 2);
  CHECK(table.find("nope") == nullptr);
  CHECK(catch_error([] { TokenTable::parse(R"({"tokens":[{"token":"a","reviewer_id":"b","roles":["boss"]}]})"); })
            .code() == Errc::SchemaError);
}

TEST_CASE("error codes map to http statuses") {
  CHECK(http_status(Errc::Unauthorized) == 401);
  CHECK(http_status(Errc::WrongReviewer) == 403);
  CHECK(http_status(Errc::NotFound) == 404);
  CHECK(http_status(Errc::WrongState) == 409);
  CHECK(http_status(Errc::InvalidEdit) == 400);
  CHECK(http_status(Errc::DigestMismatch) == 500);
}

TEST_CASE("http guards") {
  Fixture f;
  ReviewServer server(f.service, TokenTable::load(test::fixture_path("tokens.json").string()));
  const int port = server.bind("127.0.0.1", 0);
  std::thread runner([&] { server.run(); });
  server.wait_until_ready();
  httplib::Client http("127.0.0.1", port);
  const httplib::Headers annie{{"Authorization", "Bearer tok-annie"}};
  const httplib::Headers sam{{"Authorization", "Bearer tok-sam"}};
  const auto claim_path = "/api/v1/tasks/" + f.annot.task_id + "/claim";

  CHECK(http.Get("/api/v1/tasks")->status == 401);
  CHECK(http.Get("/api/v1/tasks", {{"Authorization", "Bearer wrong"}})->status == 401);
  const auto list = http.Get("/api/v1/tasks?stage=annotator&status=pending", annie);
  REQUIRE(list->status == 200);
  CHECK(json::parse(list->body).at("tasks").size() == 1);
  CHECK(http.Get("/api/v1/tasks?stage=boss", annie)->status == 400);
  // Body reviewer must be the token's reviewer, and the role must fit the stage.
  CHECK(http.Post(claim_path, annie, R"({"reviewer_id":"sam"})", "application/json")->status == 403);
  CHECK(http.Post(claim_path, sam, R"({"reviewer_id":"sam"})", "application/json")->status == 403);
  CHECK(http.Post(claim_path, annie, R"({"reviewer_id":"annie"})", "text/plain")->status == 400);
  CHECK(http.Post(claim_path, annie, R"({"reviewer_id":"annie","extra":1})", "application/json")->status == 400);
  const auto claimed = http.Post(claim_path, annie, R"({"reviewer_id":"annie"})", "application/json");
  REQUIRE(claimed->status == 200);
  CHECK(json::parse(claimed->body).at("task").at("status") == "claimed");
  const auto again = http.Post(claim_path, annie, R"({"reviewer_id":"annie"})", "application/json");
  CHECK(again->status == 409);
  const auto err = json::parse(again->body);
  CHECK(err.at("error_code") == "WrongState");
  CHECK(err.at("schema_version") == "1");
  CHECK(http.Post("/api/v1/tasks/task-999999/claim", annie, R"({"reviewer_id":"annie"})", "application/json")->status ==
        404);

  const auto c = http.Get("/api/v1/cases/" + f.c.case_id, annie);
  REQUIRE(c->status == 200);
  CHECK(case_from_json(json::parse(c->body).at("case")) == f.c);
  CHECK(http.Get("/api/v1/cases/" + f.c.case_id + "/assets/" + std::string(64, 'a'), annie)->status == 404);
  const auto g = http.Get("/api/v1/graphs/" + f.annot.graph_id, annie);
  REQUIRE(g->status == 200);
  CHECK(canonically_equal(graph_from_json(json::parse(g->body).at("graph")), f.service.graph(f.annot.graph_id)));
  const auto viol = http.Get("/api/v1/graphs/" + f.annot.graph_id + "/violations", annie);
  REQUIRE(viol->status == 200);
  CHECK(json::parse(viol->body).at("consistent") == true);
  CHECK(http.Get("/api/v1/graphs/" + f.annot.graph_id + "/violations?rules=other", annie)->status == 404);
  CHECK(http.Get("/api/v1/graphs/nope/audit", annie)->status == 404);
  const auto fin = http.Get("/api/v1/finalized", annie);
  REQUIRE(fin->status == 200);
  CHECK(json::parse(fin->body).at("graphs").empty());

  server.stop();
  runner.join();
}

TEST_CASE("assets of a case are served over http") {
  test::TempDir dir;
  FakeClock time;
  Store store(dir.path(), time.clock());
  ReviewService service(store, test::default_rules(), {}, time.clock());
  auto c = test::fixture_cases().front();
  const std::string bytes = "\x89PNG fake";
  c.evidence_assets.front().integrity_hash = store.put_asset(bytes);
  service.add_case(c);
  ReviewServer server(service, TokenTable::load(test::fixture_path("tokens.json").string()));
  const int port = server.bind("127.0.0.1", 0);
  std::thread runner([&] { server.run(); });
  server.wait_until_ready();
  httplib::Client http("127.0.0.1", port);
  const auto res = http.Get("/api/v1/cases/" + c.case_id + "/assets/" + c.evidence_assets.front().integrity_hash,
                            {{"Authorization", "Bearer tok-annie"}});
  REQUIRE(res->status == 200);
  CHECK(res->body == bytes);
  server.stop();
  runner.join();
}

}

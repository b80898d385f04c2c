#include "skg/review/server.hpp"

#include <httplib.h>

#include "skg/core/serialize.hpp"
#include "skg/core/validate.hpp"
#include "skg/error.hpp"
#include "skg/rules/evaluate.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/text.hpp"

namespace skg::review {

using nlohmann::json;

TokenTable TokenTable::parse(std::string_view json_text) {
  const auto doc = util::parse_json(json_text);
  util::ObjectReader r(doc, "");
  TokenTable table;
  std::size_t i = 0;
  for (const auto& entry : r.array("tokens")) {
    util::ObjectReader e(entry, r.child("tokens") + "/" + std::to_string(i++));
    const auto token = e.nonempty("token");
    Principal p;
    p.reviewer_id = e.nonempty("reviewer_id");
    for (const auto& role : e.array("roles")) {
      const auto stage = role.is_string() ? parse_review_stage(role.get<std::string>()) : std::nullopt;
      if (!stage) util::schema_error(e.child("roles"), "roles are annotator or senior");
      p.roles.insert(*stage);
    }
    e.finish();
    if (table.find(token)) util::schema_error(e.path(), "duplicate token");
    table.add(token, std::move(p));
  }
  r.finish();
  return table;
}

TokenTable TokenTable::load(const std::string& path) { return parse(util::read_file(path)); }

void TokenTable::add(std::string token, Principal p) { tokens_[std::move(token)] = std::move(p); }

const Principal* TokenTable::find(std::string_view token) const {
  const auto it = tokens_.find(token);
  return it == tokens_.end() ? nullptr : &it->second;
}

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::Unauthorized:
    case Errc::AuthError:
      return 401;
    case Errc::Forbidden:
    case Errc::WrongReviewer:
      return 403;
    case Errc::NotFound:
    case Errc::GraphNotFound:
      return 404;
    case Errc::WrongState:
    case Errc::DuplicateTask:
    case Errc::StageOrderViolation:
      return 409;
    case Errc::DigestMismatch:
    case Errc::Io:
      return 500;
    default:
      return 400;
  }
}

struct ReviewServer::Impl {
  ReviewService& service;
  TokenTable tokens;
  ServerOptions opts;
  httplib::Server http;

  Impl(ReviewService& s, TokenTable t, ServerOptions o) : service(s), tokens(std::move(t)), opts(std::move(o)) {}

  static void send(httplib::Response& res, int status, json body) {
    body["schema_version"] = kSchemaVersion;
    res.status = status;
    res.set_content(util::dump_canonical(body), "application/json");
  }

  static void send_error(httplib::Response& res, const Error& e) {
    send(res, http_status(e.code()),
         {{"error_code", to_string(e.code())}, {"message", e.what()}, {"details", e.details()}});
  }

  const Principal& authenticate(const httplib::Request& req) const {
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) {
      throw Error(Errc::Unauthorized, "missing bearer token");
    }
    const auto* p = tokens.find(std::string_view(header).substr(prefix.size()));
    if (!p) throw Error(Errc::Unauthorized, "unknown token");
    return *p;
  }

  static json body_of(const httplib::Request& req) {
    const auto type = req.get_header_value("Content-Type");
    if (type.rfind("application/json", 0) != 0) throw Error(Errc::BadRequest, "expected Content-Type application/json");
    const auto j = util::parse_json(req.body);
    if (!j.is_object()) throw Error(Errc::BadRequest, "body must be an object");
    return j;
  }

  static void check_reviewer(const Principal& p, const std::string& reviewer_id) {
    if (reviewer_id != p.reviewer_id) {
      throw Error(Errc::Forbidden, "token does not belong to reviewer " + reviewer_id, {{"reviewer_id", reviewer_id}});
    }
  }

  static void check_role(const Principal& p, ReviewStage stage) {
    if (!p.roles.contains(stage)) {
      throw Error(Errc::Forbidden, "reviewer lacks the " + std::string(to_string(stage)) + " role",
                  {{"stage", to_string(stage)}});
    }
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&, const Principal&)>;

  httplib::Server::Handler guarded(Handler h) {
    return [this, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        const auto& who = authenticate(req);
        h(req, res, who);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_error(res, Error(Errc::Io, e.what()));
      }
    };
  }

  void routes() {
    http.Get("/api/v1/tasks", guarded([this](const auto& req, auto& res, const Principal&) {
      std::optional<ReviewStage> stage;
      std::optional<TaskStatus> status;
      if (const auto s = req.get_param_value("stage"); !s.empty()) {
        stage = parse_review_stage(s);
        if (!stage) throw Error(Errc::BadRequest, "unknown stage " + s);
      }
      if (const auto s = req.get_param_value("status"); !s.empty()) {
        status = parse_task_status(s);
        if (!status) throw Error(Errc::BadRequest, "unknown status " + s);
      }
      json tasks = json::array();
      for (const auto& t : service.list_tasks(stage, status)) tasks.push_back(task_to_json(t));
      send(res, 200, {{"tasks", tasks}});
    }));

    http.Post("/api/v1/tasks/:id/claim", guarded([this](const auto& req, auto& res, const Principal& who) {
      const auto body = body_of(req);
      util::ObjectReader r(body, "");
      const auto reviewer = r.nonempty("reviewer_id");
      r.finish();
      check_reviewer(who, reviewer);
      const auto id = req.path_params.at("id");
      check_role(who, service.task(id).stage);
      send(res, 200, {{"task", task_to_json(service.claim_task(id, reviewer))}});
    }));

    http.Post("/api/v1/tasks/:id/decision", guarded([this](const auto& req, auto& res, const Principal& who) {
      const auto body = body_of(req);
      util::ObjectReader r(body, "");
      const auto reviewer = r.nonempty("reviewer_id");
      const auto kind = r.string("decision");
      Decision d;
      d.note = r.opt_string("note").value_or("");
      if (kind == "approve") {
        d.kind = Decision::Kind::Approve;
      } else if (kind == "reject") {
        d.kind = Decision::Kind::Reject;
      } else if (kind == "edit") {
        d.kind = Decision::Kind::Edit;
        const auto* log = r.optional("edit_log");
        if (!log) throw Error(Errc::BadRequest, "edit decision needs edit_log");
        d.edit_log = edit_log_from_json(*log, "/edit_log");
      } else {
        throw Error(Errc::BadRequest, "decision must be approve, reject or edit", {{"decision", kind}});
      }
      if (d.kind != Decision::Kind::Edit && r.optional("edit_log")) {
        throw Error(Errc::BadRequest, "edit_log is only allowed with an edit decision");
      }
      r.finish();
      check_reviewer(who, reviewer);
      const auto id = req.path_params.at("id");
      check_role(who, service.task(id).stage);
      const auto t = service.submit_decision(id, reviewer, d);
      json out{{"task", task_to_json(t)}};
      if (t.result_graph_id) out["derived_graph_id"] = *t.result_graph_id;
      send(res, 200, out);
    }));

    http.Get("/api/v1/cases/:id", guarded([this](const auto& req, auto& res, const Principal&) {
      send(res, 200, {{"case", case_to_json(service.case_data(req.path_params.at("id")))}});
    }));

    http.Get("/api/v1/cases/:id/assets/:hash", guarded([this](const auto& req, auto& res, const Principal&) {
      const auto c = service.case_data(req.path_params.at("id"));
      const auto& hash = req.path_params.at("hash");
      const bool owned = std::any_of(c.evidence_assets.begin(), c.evidence_assets.end(),
                                     [&](const EvidenceAsset& a) { return a.integrity_hash == hash; });
      const auto bytes = owned ? service.store().get_asset(hash) : std::nullopt;
      if (!bytes) throw Error(Errc::NotFound, "no asset " + hash + " for case " + c.case_id, {{"hash", hash}});
      res.status = 200;
      res.set_content(*bytes, "application/octet-stream");
    }));

    http.Get("/api/v1/graphs/:id", guarded([this](const auto& req, auto& res, const Principal&) {
      const auto g = service.graph(req.path_params.at("id"));
      send(res, 200, {{"graph", graph_to_json(g)}});
    }));

    http.Get("/api/v1/graphs/:id/audit", guarded([this](const auto& req, auto& res, const Principal&) {
      const auto& id = req.path_params.at("id");
      json trail = json::array();
      for (const auto& e : service.audit_trail(id)) {
        trail.push_back({{"seq", e.seq},
                         {"at", e.at.to_string()},
                         {"kind", to_string(e.kind)},
                         {"key", e.key},
                         {"meta", e.meta}});
      }
      send(res, 200, {{"graph_id", id}, {"trail", trail}});
    }));

    http.Get("/api/v1/graphs/:id/violations", guarded([this](const auto& req, auto& res, const Principal&) {
      const auto& id = req.path_params.at("id");
      auto ruleset = req.get_param_value("rules");
      if (ruleset.empty()) ruleset = "default";
      const rules::ConstraintSet* rs = &service.rules();
      if (ruleset != "default") {
        const auto it = opts.rulesets.find(ruleset);
        if (it == opts.rulesets.end()) throw Error(Errc::NotFound, "no rule set " + ruleset, {{"rules", ruleset}});
        rs = &it->second;
      }
      const auto g = service.graph(id);
      json violations = json::array(), structural = json::array();
      bool consistent = true;
      for (const auto& v : rules::evaluate(g, *rs)) {
        consistent = consistent && v.severity != rules::Severity::Blocking;
        violations.push_back(rules::violation_to_json(v));
      }
      for (const auto& v : validate_graph(g).violations) {
        structural.push_back({{"code", v.code}, {"refs", v.refs}, {"message", v.message}});
      }
      send(res, 200,
           {{"graph_id", id},
            {"rules", ruleset},
            {"consistent", consistent},
            {"violations", violations},
            {"structural", structural}});
    }));

    http.Get("/api/v1/finalized", guarded([this](const auto&, auto& res, const Principal&) {
      send(res, 200, {{"graphs", service.list_finalized()}});
    }));

    if (opts.ui_dir) http.set_mount_point("/ui", *opts.ui_dir);
  }
};

ReviewServer::ReviewServer(ReviewService& service, TokenTable tokens, ServerOptions opts)
    : impl_(std::make_unique<Impl>(service, std::move(tokens), std::move(opts))) {
  const auto threads = impl_->opts.threads;
  impl_->http.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  impl_->routes();
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->http.bind_to_any_port(host);
    if (bound <= 0) throw Error(Errc::Io, "cannot bind " + host);
    return bound;
  }
  if (!impl_->http.bind_to_port(host, port)) {
    throw Error(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ReviewServer::run() { impl_->http.listen_after_bind(); }

void ReviewServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

void ReviewServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

}  // namespace skg::review

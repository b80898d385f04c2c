#include "skg/synth/loop.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <chrono>
#include <thread>

#include "skg/rules/evaluate.hpp"
#include "skg/synth/payload.hpp"
#include "skg/util/digest.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/text.hpp"

namespace skg::synth {

using nlohmann::json;

namespace {

std::string now_utc() {
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch());
  return Timestamp{secs.count()}.to_string();
}

GenerationBundle call_model(const ComplaintCase& x, const PromptTemplate& p, const GenerationBundle* prior,
                            const VerificationReport* report, std::size_t iteration, const LlmClientConfig& cfg,
                            LlmClient& client, bool graph_required, TraceRecord* trace) {
  const auto prompt = render_prompt(p, x, prior, report);
  TraceRecord local;
  TraceRecord& t = trace != nullptr ? *trace : local;
  t.case_id = x.case_id;
  t.stage = std::string(to_string(p.stage));
  t.iteration = iteration;
  t.prompt_digest = util::sha256_hex(prompt);
  t.started_at = now_utc();

  LlmRequest req;
  req.messages = {{"user", prompt}};
  req.temperature = p.stage == Stage::Verify ? cfg.verify_temperature : cfg.temperature;
  req.max_tokens = cfg.max_output_tokens;
  req.stage = t.stage;
  req.case_id = x.case_id;
  LlmReply reply;
  try {
    reply = client.complete(req);
  } catch (const Error& e) {
    t.error = std::string(to_string(e.code()));
    t.finished_at = now_utc();
    throw;
  }
  t.raw_response = reply.text;
  t.retries = reply.retries;
  t.finished_at = now_utc();
  try {
    auto b = parse_bundle(reply.text, iteration, graph_required);
    t.parsed_ok = true;
    return b;
  } catch (const Error& e) {
    t.error = std::string(to_string(e.code()));
    json details = e.details();
    details["cause"] = to_string(e.code());
    throw Error(Errc::ParseFailure, e.what(), details);
  }
}

void strip_policy_nodes(GenerationBundle& b) {
  if (!b.graph) return;
  auto& g = *b.graph;
  std::set<std::string> removed;
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::Policy) removed.insert(n.node_id);
  }
  std::erase_if(g.nodes, [&](const SkgNode& n) { return removed.contains(n.node_id); });
  std::erase_if(g.edges, [&](const SkgEdge& e) { return removed.contains(e.src) || removed.contains(e.dst); });
  for (const auto& id : removed) b.description.coverage.erase(id);
  std::erase_if(b.qa, [](const QAItem& q) { return q.subtask == Subtask::Policy; });
}

}  // namespace

AblationToggles parse_ablations(std::string_view csv) {
  AblationToggles t;
  for (const auto& raw : util::split(csv, ',')) {
    const auto name = util::trim(raw);
    if (name.empty()) continue;
    if (name == "skip_verification") {
      t.skip_verification = true;
    } else if (name == "skip_graph") {
      t.skip_graph = true;
    } else if (name == "skip_policy_nodes") {
      t.skip_policy_nodes = true;
    } else {
      throw Error(Errc::BadRequest, "unknown ablation '" + name + "'");
    }
  }
  return t;
}

json trace_to_json(const TraceRecord& t) {
  return {{"case_id", t.case_id},
          {"stage", t.stage},
          {"iteration", t.iteration},
          {"prompt_digest", t.prompt_digest},
          {"raw_response", t.raw_response},
          {"parsed_ok", t.parsed_ok},
          {"findings_count", t.findings_count},
          {"retries", t.retries},
          {"error", t.error},
          {"timestamps", {{"started_at", t.started_at}, {"finished_at", t.finished_at}}}};
}

Templates templates_from(const std::map<Stage, PromptTemplate>& loaded) {
  const auto get = [&](Stage s) {
    const auto it = loaded.find(s);
    if (it == loaded.end()) throw Error(Errc::MissingPlaceholder, "no " + std::string(to_string(s)) + " template");
    return it->second;
  };
  return {get(Stage::Generate), get(Stage::Verify), get(Stage::Refine)};
}

GenerationBundle call_generate(const ComplaintCase& x, const PromptTemplate& p, const LlmClientConfig& cfg,
                               LlmClient& client, bool graph_required, TraceRecord* trace) {
  return call_model(x, p, nullptr, nullptr, 0, cfg, client, graph_required, trace);
}

GenerationBundle call_refine(const ComplaintCase& x, const GenerationBundle& b, const VerificationReport& report,
                             const PromptTemplate& p, const LlmClientConfig& cfg, LlmClient& client,
                             bool graph_required, TraceRecord* trace) {
  return call_model(x, p, &b, &report, b.iteration + 1, cfg, client, graph_required, trace);
}

LoopOutcome run_loop(const ComplaintCase& x, const Templates& p, const rules::ConstraintSet& c,
                     const LlmClientConfig& cfg, LlmClient& client, const LoopConfig& loop_cfg) {
  if (loop_cfg.k_max < 1) throw Error(Errc::BadRequest, "k_max must be at least 1");
  const auto& toggles = loop_cfg.toggles;
  const bool graph_required = !toggles.skip_graph;
  const rules::ConstraintSet rule_set = toggles.skip_policy_nodes ? rules::without_kind(c, NodeKind::Policy) : c;

  LoopOutcome out;
  out.case_id = x.case_id;
  if (toggles.skip_graph) out.flags.emplace_back("plain_text");
  if (toggles.skip_policy_nodes) out.flags.emplace_back("no_policy_nodes");

  const auto escalate = [&](std::string reason) {
    out.kind = LoopOutcome::Kind::Escalated;
    out.reason = std::move(reason);
    out.final.reset();
    return out;
  };
  const auto finalize = [&](const GenerationBundle& b) {
    out.kind = LoopOutcome::Kind::Final;
    out.final = b;
    return out;
  };

  std::optional<GenerationBundle> current;
  std::optional<VerificationReport> last_report;
  std::optional<GenerationBundle> last_clean;
  for (std::size_t k = 0; k < loop_cfg.k_max; ++k) {
    TraceRecord t;
    GenerationBundle b;
    try {
      b = current ? call_refine(x, *current, *last_report, p.refine, cfg, client, graph_required, &t)
                  : call_generate(x, p.generate, cfg, client, graph_required, &t);
    } catch (const Error& e) {
      t.iteration = k;
      out.trace.push_back(t);
      if (e.code() != Errc::ParseFailure) return escalate(std::string(e.what()));
      VerificationReport failed{k, {{"payload-" + e.details().value("cause", std::string("error")),
                                     rules::Severity::Blocking, FindingSource::Structural, {}, e.what()}}};
      out.trace.back().findings_count = 1;
      out.reports.push_back(failed);
      if (current) last_report = failed;
      continue;
    }
    b.iteration = k;
    if (toggles.skip_graph) b.graph.reset();
    if (toggles.skip_policy_nodes) strip_policy_nodes(b);
    out.bundles.push_back(b);
    out.trace.push_back(t);

    if (toggles.skip_verification) {
      out.flags.emplace_back("unverified");
      return finalize(b);
    }

    TraceRecord v;
    v.case_id = x.case_id;
    v.stage = "verify";
    v.iteration = k;
    v.started_at = now_utc();
    VerificationReport report;
    try {
      JudgeContext judge{&client, &p.verify, &cfg, &v.raw_response, &v.retries};
      if (loop_cfg.llm_judge) v.prompt_digest = util::sha256_hex(render_prompt(p.verify, x, &b, nullptr));
      report = run_verify(x, b, rule_set,
                          {.llm_judge = loop_cfg.llm_judge, .promote_judge = loop_cfg.promote_judge}, judge);
    } catch (const Error& e) {
      v.error = std::string(to_string(e.code()));
      v.finished_at = now_utc();
      out.trace.push_back(v);
      return escalate(std::string(e.what()));
    }
    v.parsed_ok = true;
    v.findings_count = report.findings.size();
    v.finished_at = now_utc();
    out.trace.push_back(v);
    out.trace[out.trace.size() - 2].findings_count = report.findings.size();
    out.reports.push_back(report);

    current = b;
    last_report = report;
    if (!report.has_blocking()) {
      last_clean = b;
      if (loop_cfg.early_stop) return finalize(b);
    }
  }
  if (last_clean) return finalize(*last_clean);
  return escalate("blocking findings remain after " + std::to_string(loop_cfg.k_max) + " rounds");
}

TraceWriter::TraceWriter(const std::string& path) : out_(path, std::ios::app | std::ios::binary) {
  if (!out_) throw Error(Errc::Io, "cannot open trace file " + path);
}

void TraceWriter::append(std::span<const TraceRecord> records) {
  std::lock_guard lock(mutex_);
  for (const auto& r : records) out_ << util::dump_canonical(trace_to_json(r)) << '\n';
  out_.flush();
}

std::vector<LoopOutcome> run_batch(std::span<const ComplaintCase> cases, const Templates& p,
                                   const rules::ConstraintSet& c, const LlmClientConfig& cfg, LlmClient& client,
                                   const LoopConfig& loop_cfg, std::size_t workers, TraceWriter* trace) {
  std::vector<LoopOutcome> outcomes(cases.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      try {
        outcomes[i] = run_loop(cases[i], p, c, cfg, client, loop_cfg);
      } catch (const std::exception& e) {
        outcomes[i] = LoopOutcome{};
        outcomes[i].case_id = cases[i].case_id;
        outcomes[i].reason = e.what();
      }
      if (trace != nullptr) trace->append(outcomes[i].trace);
    }
  };
  std::vector<std::jthread> pool;
  const auto width = std::max<std::size_t>(1, std::min(workers, cases.size()));
  for (std::size_t w = 1; w < width; ++w) pool.emplace_back(work);
  work();
  return outcomes;
}

}  // namespace skg::synth

#include "skg/eval/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "skg/core/serialize.hpp"
#include "skg/corpus/corrupt.hpp"
#include "skg/error.hpp"
#include "skg/util/digest.hpp"
#include "skg/util/text.hpp"

namespace skg::eval {

using nlohmann::json;

std::string_view to_string(Slice s) noexcept {
  switch (s) {
    case Slice::Full: return "full";
    case Slice::Corrupt10: return "corrupt_10";
    case Slice::Corrupt30: return "corrupt_30";
    case Slice::Rare: return "rare";
  }
  return "full";
}

std::optional<Slice> parse_slice(std::string_view s) noexcept {
  for (auto v : {Slice::Full, Slice::Corrupt10, Slice::Corrupt30, Slice::Rare}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::vector<Slice> parse_slices(std::string_view list) {
  std::vector<Slice> out;
  for (const auto& part : util::split(list, ',')) {
    const auto name = util::trim(part);
    const auto s = parse_slice(name);
    if (!s) throw Error(Errc::BadRequest, "unknown slice: " + name, {{"slice", name}});
    if (std::find(out.begin(), out.end(), *s) != out.end()) {
      throw Error(Errc::BadRequest, "slice listed twice: " + name, {{"slice", name}});
    }
    out.push_back(*s);
  }
  if (out.empty()) throw Error(Errc::BadRequest, "no slices given");
  return out;
}

double corruption_level(Slice s) noexcept {
  switch (s) {
    case Slice::Corrupt10: return 0.10;
    case Slice::Corrupt30: return 0.30;
    default: return 0.0;
  }
}

namespace {

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// First occurrence of `needle` in `hay` bounded by non-word characters.
std::optional<std::size_t> find_bounded(std::string_view hay, std::string_view needle) {
  if (needle.empty()) return std::nullopt;
  for (std::size_t pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1)) {
    const bool left = pos == 0 || !word_char(hay[pos - 1]);
    const auto end = pos + needle.size();
    const bool right = end == hay.size() || !word_char(hay[end]);
    if (left && right) return pos;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::size_t> extract_option(std::string_view reply, std::span<const QAOption> options) {
  const auto t = util::trim(reply);
  std::size_t i = 0;
  while (i < t.size() && (t[i] == '(' || t[i] == '[' || t[i] == '*')) ++i;
  if (i < t.size() && (i + 1 == t.size() || !word_char(t[i + 1]))) {
    for (std::size_t k = 0; k < options.size(); ++k) {
      if (options[k].label.size() == 1 && options[k].label[0] == t[i]) return k;
    }
  }

  const auto lower = util::to_lower(t);
  std::optional<std::pair<std::size_t, std::size_t>> best;  // (position, -length) ordering via compare below
  std::optional<std::size_t> pick;
  auto consider = [&](std::optional<std::size_t> pos, std::size_t len, std::size_t k) {
    if (!pos) return;
    if (!best || *pos < best->first || (*pos == best->first && len > best->second)) {
      best = std::make_pair(*pos, len);
      pick = k;
    }
  };
  for (std::size_t k = 0; k < options.size(); ++k) {
    consider(find_bounded(t, options[k].label), options[k].label.size(), k);
    const auto text = util::to_lower(options[k].text);
    consider(find_bounded(lower, text), text.size(), k);
  }
  return pick;
}

std::optional<std::string> extract_label(std::string_view reply, std::span<const std::string> labels) {
  const auto lower = util::to_lower(util::trim(reply));
  for (const auto& l : labels) {
    if (util::to_lower(l) == lower) return l;
  }
  std::optional<std::pair<std::size_t, std::size_t>> best;
  std::optional<std::string> pick;
  for (const auto& l : labels) {
    const auto needle = util::to_lower(l);
    const auto pos = find_bounded(lower, needle);
    if (!pos) continue;
    if (!best || *pos < best->first || (*pos == best->first && needle.size() > best->second)) {
      best = std::make_pair(*pos, needle.size());
      pick = l;
    }
  }
  return pick;
}

std::string render_eval_prompt(const EvalItem& item) {
  const auto& r = *item.record;
  const auto& in = item.inputs;
  std::string out;
  switch (r.benchmark) {
    case corpus::Benchmark::Text:
      out += "Scene description:\n" + in.at("text").get<std::string>() + "\n\n";
      break;
    case corpus::Benchmark::MM: {
      out += "Complaint narrative:\n" + in.at("narrative").get<std::string>() + "\n\nEvidence:\n";
      for (const auto& a : in.at("assets")) {
        out += "- " + a.at("asset_id").get<std::string>() + " (" + a.at("medium").get<std::string>() + ")";
        if (a.contains("extracted_text")) out += ": " + a.at("extracted_text").get<std::string>();
        out += "\n";
      }
      out += "\nMetadata:\n";
      for (const auto& [k, v] : attrs_from_json(in.at("metadata"), "inputs.metadata")) {
        out += k + ": " + v.to_display() + "\n";
      }
      out += "\nRecent interactions:\n" + in.at("history_summary").get<std::string>() + "\n";
      break;
    }
    case corpus::Benchmark::CfpbProduct:
    case corpus::Benchmark::CfpbIssue: {
      const bool product = r.benchmark == corpus::Benchmark::CfpbProduct;
      out += "Complaint narrative:\n" + in.at("narrative").get<std::string>() + "\n\n";
      out += std::string("Which ") + (product ? "product" : "issue") + " does this complaint concern? Choose one of:\n";
      for (const auto& l : item.labels) out += "- " + l + "\n";
      out += "Reply with the label only.\n";
      return out;
    }
  }
  out += corpus::render_question(*r.qa);
  out += "\nReply with the letter of your answer first.\n";
  return out;
}

Prediction interpret_answer(const EvalItem& item, std::string_view answer) {
  const auto& r = *item.record;
  Prediction p;
  p.record_id = r.record_id;
  if (r.qa) {
    p.option_index = extract_option(answer, r.qa->options);
    if (!p.option_index) {
      p.abstained = true;
      p.abstain_reason = "unparseable";
      return p;
    }
    const auto s = r.qa->subtask;
    if (s == Subtask::Action || s == Subtask::Resolution) {
      p.action = parse_action(r.qa->options[*p.option_index].text);
    }
  } else {
    p.label = extract_label(answer, item.labels);
    if (!p.label) {
      p.abstained = true;
      p.abstain_reason = "unparseable";
    }
  }
  return p;
}

ReplayPredictor::ReplayPredictor(std::string_view jsonl) : digest_(util::sha256_hex(jsonl)) {
  std::size_t line = 0;
  for (const auto& doc : corpus::parse_jsonl(jsonl)) {
    ++line;
    const auto where = "replay line " + std::to_string(line);
    if (!doc.is_object() || !doc.contains("record_id") || !doc.at("record_id").is_string() ||
        !doc.contains("answer") || !doc.at("answer").is_string()) {
      throw Error(Errc::SchemaError, where + ": expected {record_id, answer, slice?}", {{"line", line}});
    }
    std::string slice;
    if (doc.contains("slice")) {
      slice = doc.at("slice").get<std::string>();
      if (!parse_slice(slice)) throw Error(Errc::SchemaError, where + ": unknown slice " + slice, {{"line", line}});
    }
    answers_[{slice, doc.at("record_id").get<std::string>()}] = doc.at("answer").get<std::string>();
  }
}

Prediction ReplayPredictor::predict(const EvalItem& item) {
  const auto& id = item.record->record_id;
  auto it = answers_.find({std::string(to_string(item.slice)), id});
  if (it == answers_.end()) it = answers_.find({"", id});
  if (it == answers_.end()) {
    throw Error(Errc::ReplayMismatch, "replay file has no answer for " + id,
                {{"record_id", id}, {"slice", to_string(item.slice)}});
  }
  return interpret_answer(item, it->second);
}

ModelPredictor::ModelPredictor(synth::LlmClient& client, std::string model_name, std::int64_t max_tokens)
    : client_(client), model_name_(std::move(model_name)), max_tokens_(max_tokens) {}

Prediction ModelPredictor::predict(const EvalItem& item) {
  synth::LlmRequest req;
  req.messages.push_back({"user", render_eval_prompt(item)});
  req.temperature = Decimal(0, 0);
  req.max_tokens = max_tokens_;
  req.stage = "eval";
  req.case_id = item.record->base_case_id;
  const auto start = std::chrono::steady_clock::now();
  Prediction p;
  try {
    const auto reply = client_.complete(req);
    p = interpret_answer(item, reply.text);
    p.rationale = reply.text;
  } catch (const Error& e) {
    if (e.code() != Errc::TransportError) throw;
    p.record_id = item.record->record_id;
    p.abstained = true;
    p.abstain_reason = "transport";
  }
  p.latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return p;
}

json eval_config(std::span<const corpus::BenchRecord> bench, const Predictor& predictor, const EvalOptions& opts) {
  json slices = json::array();
  for (auto s : opts.slices) slices.push_back(to_string(s));
  return {{"bench_digest", util::sha256_hex(corpus::records_to_jsonl(bench))},
          {"source", predictor.source()},
          {"slices", slices},
          {"eval_split", opts.eval_split ? json(to_string(*opts.eval_split)) : json("all")},
          {"corruption_seed", opts.corruption_seed},
          {"rare_threshold", opts.rare_threshold},
          {"rules_digest", opts.rules_digest}};
}

namespace {

bool in_eval_split(const corpus::BenchRecord& r, const EvalOptions& opts) {
  return !opts.eval_split || r.split == *opts.eval_split;
}

std::vector<std::string> cfpb_labels(std::span<const corpus::BenchRecord> bench, corpus::Benchmark which) {
  std::set<std::string> labels;
  for (const auto& r : bench) {
    if (r.benchmark == which && r.label) labels.insert(*r.label);
  }
  return {labels.begin(), labels.end()};
}

// Indices (into bench) of the records a slice evaluates.
std::vector<std::size_t> slice_members(std::span<const corpus::BenchRecord> bench, Slice s, const EvalOptions& opts) {
  std::vector<std::size_t> out;
  if (s != Slice::Rare) {
    for (std::size_t i = 0; i < bench.size(); ++i) {
      if (in_eval_split(bench[i], opts)) out.push_back(i);
    }
    return out;
  }
  std::vector<std::size_t> scene;
  std::vector<TypedRecord> typed;
  for (std::size_t i = 0; i < bench.size(); ++i) {
    if (!bench[i].qa) continue;
    scene.push_back(i);
    typed.push_back({bench[i].complaint_type, bench[i].split == Split::Train});
  }
  for (auto k : rare_type_filter(typed, opts.rare_threshold)) {
    if (in_eval_split(bench[scene[k]], opts)) out.push_back(scene[k]);
  }
  return out;
}

SubtaskScore score_block(const std::vector<std::string>& preds, const std::vector<std::string>& golds,
                         std::size_t abstained, bool macro) {
  SubtaskScore s;
  s.n = preds.size();
  s.abstained = abstained;
  s.macro = macro;
  for (std::size_t i = 0; i < preds.size(); ++i) s.correct += preds[i] == golds[i];
  if (macro) {
    std::set<std::string> labels(golds.begin(), golds.end());
    for (const auto& p : preds) {
      if (!p.empty()) labels.insert(p);
    }
    const std::vector<std::string> label_set(labels.begin(), labels.end());
    s.score = macro_f1(preds, golds, label_set);
  } else {
    s.score = accuracy(preds, golds);
  }
  return s;
}

bool is_macro(Subtask t) { return t == Subtask::Action || t == Subtask::Responsibility; }

EvalReport reduce(Slice slice, std::span<const corpus::BenchRecord> bench, const std::vector<std::size_t>& members,
                  const std::vector<Prediction>& preds, const rules::ConstraintSet& c, const GraphLookup& graphs) {
  EvalReport rep;
  rep.slice = slice;
  rep.records = members.size();

  struct Column {
    std::vector<std::string> preds, golds;
    std::size_t abstained = 0;
  };
  std::map<Subtask, Column> by_subtask;
  Column product, issue;
  std::vector<PcItem> pc;
  std::size_t scene_n = 0, scene_correct = 0;

  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto& r = bench[members[k]];
    const auto& p = preds[k];
    rep.abstentions += p.abstained;
    if (r.qa) {
      auto& col = by_subtask[r.qa->subtask];
      const std::string pred = p.option_index ? r.qa->options[*p.option_index].text : std::string();
      col.preds.push_back(pred);
      col.golds.push_back(r.qa->gold().text);
      col.abstained += p.abstained;
      ++scene_n;
      scene_correct += p.option_index && *p.option_index == r.qa->gold_index;
      const auto t = r.qa->subtask;
      if (graphs && (t == Subtask::Action || t == Subtask::Resolution)) {
        pc.push_back({r.graph_id, p.action, p.abstained});
      }
    } else {
      auto& col = r.benchmark == corpus::Benchmark::CfpbProduct ? product : issue;
      col.preds.push_back(p.label.value_or(""));
      col.golds.push_back(*r.label);
      col.abstained += p.abstained;
    }
  }

  for (const auto& [t, col] : by_subtask) rep.subtasks[t] = score_block(col.preds, col.golds, col.abstained, is_macro(t));
  if (!product.preds.empty()) rep.cfpb_product = score_block(product.preds, product.golds, product.abstained, false);
  if (!issue.preds.empty()) rep.cfpb_issue = score_block(issue.preds, issue.golds, issue.abstained, true);

  auto pct = [&](Subtask t) { return rep.subtasks.at(t).score * 100; };
  auto has_all = [&](const auto& ts) {
    return std::all_of(ts.begin(), ts.end(), [&](Subtask t) { return rep.subtasks.contains(t); });
  };
  if (has_all(kTextSubtasks)) rep.avg_text = avg_text(pct(Subtask::Evidence), pct(Subtask::Policy), pct(Subtask::Action));
  if (has_all(kMmSubtasks)) {
    rep.avg_mm = avg_mm(pct(Subtask::Routing), pct(Subtask::Responsibility), pct(Subtask::Resolution));
  }
  if (!pc.empty()) rep.policy_consistency = policy_consistency(pc, graphs, c);
  if (scene_n > 0) {
    rep.accuracy = Score(scene_correct) / Score(scene_n) * 100;
    if (slice == Slice::Rare) rep.rare_type_acc = rep.accuracy;
  }
  return rep;
}

}  // namespace

EvalRun run_eval(std::span<const corpus::BenchRecord> bench, Predictor& predictor, const rules::ConstraintSet& c,
                 const GraphLookup& graphs, const EvalOptions& opts) {
  const auto product_labels = cfpb_labels(bench, corpus::Benchmark::CfpbProduct);
  const auto issue_labels = cfpb_labels(bench, corpus::Benchmark::CfpbIssue);
  const auto digest = util::sha256_hex(eval_config(bench, predictor, opts).dump());

  EvalRun run;
  for (const auto slice : opts.slices) {
    auto members = slice_members(bench, slice, opts);
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return bench[a].record_id < bench[b].record_id; });

    std::vector<EvalItem> items(members.size());
    const double level = corruption_level(slice);
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto& r = bench[members[k]];
      auto& item = items[k];
      item.record = &r;
      item.slice = slice;
      item.inputs = r.inputs;
      if (level > 0.0 && r.benchmark == corpus::Benchmark::MM) {
        item.inputs = corpus::corrupt_mm_inputs(r.inputs, r.base_case_id,
                                                {level, opts.corruption_seed, corpus::CorruptionTarget::EvidenceAssets});
      }
      if (r.benchmark == corpus::Benchmark::CfpbProduct) item.labels = product_labels;
      if (r.benchmark == corpus::Benchmark::CfpbIssue) item.labels = issue_labels;
    }

    // Results land in their record's slot, so the fold below never depends on
    // completion order.
    std::vector<Prediction> preds(items.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto work = [&] {
      for (std::size_t k = next++; k < items.size(); k = next++) {
        try {
          preds[k] = predictor.predict(items[k]);
        } catch (...) {
          std::lock_guard lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          next = items.size();
        }
      }
    };
    {
      const auto n = std::max<std::size_t>(1, std::min(opts.workers, items.size()));
      std::vector<std::jthread> pool;
      for (std::size_t w = 1; w < n; ++w) pool.emplace_back(work);
      work();
    }
    if (first_error) std::rethrow_exception(first_error);

    auto rep = reduce(slice, bench, members, preds, c, graphs);
    rep.config_digest = digest;
    run.reports.push_back(std::move(rep));
    run.predictions[slice] = std::move(preds);
  }
  return run;
}

namespace {

json number(const Score& s, int digits) { return std::stod(format_score(s, digits)); }

json score_json(const SubtaskScore& s) {
  return {{"n", s.n},
          {"correct", s.correct},
          {"abstained", s.abstained},
          {"metric", s.macro ? "macro_f1" : "accuracy"},
          {"score", number(s.score, 4)},
          {"percent", number(s.score * 100, 2)},
          {"exact", s.score.str()}};
}

json aggregate_json(const std::optional<Score>& s, int digits) {
  if (!s) return nullptr;
  return {{"value", number(*s, digits)}, {"exact", s->str()}};
}

}  // namespace

json report_to_json(std::span<const EvalReport> reports, const json& config) {
  json slices = json::object();
  for (const auto& r : reports) {
    json subtasks = json::object();
    for (const auto& [t, s] : r.subtasks) subtasks[std::string(to_string(t))] = score_json(s);
    json cfpb = json::object();
    if (r.cfpb_product) cfpb["product"] = score_json(*r.cfpb_product);
    if (r.cfpb_issue) cfpb["issue"] = score_json(*r.cfpb_issue);
    slices[std::string(to_string(r.slice))] = {
        {"counts", {{"records", r.records}, {"abstentions", r.abstentions}}},
        {"subtasks", subtasks},
        {"cfpb", cfpb},
        {"aggregates",
         {{"avg_text", aggregate_json(r.avg_text, 2)},
          {"avg_mm", aggregate_json(r.avg_mm, 2)},
          {"policy_consistency", aggregate_json(r.policy_consistency, 4)},
          {"accuracy", aggregate_json(r.accuracy, 2)},
          {"rare_type_acc", aggregate_json(r.rare_type_acc, 2)}}}};
  }
  return {{"schema_version", kSchemaVersion},
          {"config_digest", util::sha256_hex(config.dump())},
          {"config", config},
          {"slices", slices}};
}

std::string report_to_csv(std::span<const EvalReport> reports) {
  std::string out = "slice,subtask,n,correct,abstained,score,percent\n";
  auto row = [&](const EvalReport& r, std::string_view name, const SubtaskScore& s) {
    out += std::string(to_string(r.slice)) + "," + std::string(name) + "," + std::to_string(s.n) + "," +
           std::to_string(s.correct) + "," + std::to_string(s.abstained) + "," + format_score(s.score, 4) + "," +
           format_score(s.score * 100, 2) + "\n";
  };
  // Aggregates carry no counts; percent-scale values also appear as fractions.
  auto agg = [&](const EvalReport& r, std::string_view name, const std::optional<Score>& v, bool percent_scale) {
    if (!v) return;
    const Score frac = percent_scale ? Score(*v / 100) : *v;
    out += std::string(to_string(r.slice)) + "," + std::string(name) + ",,,," + format_score(frac, 4) + "," +
           format_score(frac * 100, 2) + "\n";
  };
  for (const auto& r : reports) {
    for (const auto& [t, s] : r.subtasks) row(r, to_string(t), s);
    if (r.cfpb_product) row(r, "cfpb_product", *r.cfpb_product);
    if (r.cfpb_issue) row(r, "cfpb_issue", *r.cfpb_issue);
    agg(r, "avg_text", r.avg_text, true);
    agg(r, "avg_mm", r.avg_mm, true);
    agg(r, "policy_consistency", r.policy_consistency, false);
    agg(r, "accuracy", r.accuracy, true);
    agg(r, "rare_type_acc", r.rare_type_acc, true);
  }
  return out;
}

std::string predictions_to_jsonl(const EvalRun& run, std::span<const corpus::BenchRecord> bench) {
  std::map<std::string, const corpus::BenchRecord*> by_id;
  for (const auto& r : bench) by_id[r.record_id] = &r;
  std::vector<json> docs;
  for (const auto& [slice, preds] : run.predictions) {
    for (const auto& p : preds) {
      std::string answer;
      const auto* r = by_id.at(p.record_id);
      if (p.option_index) answer = r->qa->options[*p.option_index].label;
      if (p.label) answer = *p.label;
      docs.push_back({{"record_id", p.record_id}, {"slice", to_string(slice)}, {"answer", answer}});
    }
  }
  return corpus::to_jsonl(docs);
}

}  // namespace skg::eval

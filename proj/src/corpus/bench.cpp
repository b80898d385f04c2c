#include "skg/corpus/bench.hpp"

#include <algorithm>
#include <numeric>

#include "skg/core/serialize.hpp"
#include "skg/corpus/describe.hpp"
#include "skg/rules/generalize.hpp"
#include "skg/util/digest.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/rng.hpp"
#include "skg/util/text.hpp"

namespace skg::corpus {

using nlohmann::json;

namespace {

void check_version(util::ObjectReader& r) {
  const auto v = r.string("schema_version");
  if (v != kSchemaVersion) throw Error(Errc::VersionError, "unsupported schema_version '" + v + "'", {{"path", r.child("schema_version")}});
}

std::string complaint_type_of(const FinalCase& f, const std::optional<SceneKnowledgeGraph>& g) {
  if (g) {
    if (const auto t = g->dim(SceneDim::ComplaintType)) return *t;
  }
  if (const auto it = f.case_data.metadata.find("complaint_type");
      it != f.case_data.metadata.end() && it->second.is_string()) {
    return it->second.as_string();
  }
  return {};
}

template <std::size_t N>
std::vector<QAItem> select_qa(const std::array<Subtask, N>& subtasks, double p_third, const std::string& key,
                              const std::optional<SceneKnowledgeGraph>& graph, const std::vector<QAItem>* bundle_qa,
                              std::uint64_t seed) {
  auto rng = util::Rng::keyed(key, seed);
  const std::size_t want = rng.unit() < p_third ? 3 : 2;
  std::vector<Subtask> order(subtasks.begin(), subtasks.end());
  rng.shuffle(std::span<Subtask>(order));
  std::vector<QAItem> out;
  for (auto s : order) {
    if (out.size() == want) break;
    const std::uint64_t qa_seed = rng.next();
    if (bundle_qa != nullptr) {
      const auto it = std::find_if(bundle_qa->begin(), bundle_qa->end(), [&](const QAItem& q) { return q.subtask == s; });
      if (it != bundle_qa->end()) {
        out.push_back(*it);
        continue;
      }
    }
    if (!graph) continue;
    try {
      out.push_back(build_qa(*graph, s, qa_seed));
    } catch (const Error& e) {
      if (e.code() != Errc::MissingAttribute) throw;
    }
  }
  return out;
}

json asset_refs(const ComplaintCase& c) {
  json out = json::array();
  for (const auto& a : c.evidence_assets) {
    json ref{{"asset_id", a.asset_id}, {"medium", to_string(a.medium)}, {"uri", a.uri}, {"integrity_hash", a.integrity_hash}};
    if (a.extracted_text) ref["extracted_text"] = *a.extracted_text;
    out.push_back(std::move(ref));
  }
  return out;
}

}  // namespace

json final_to_json(const FinalCase& f) {
  json bundle = bundle_payload_to_json(f.bundle);
  bundle["iteration"] = f.bundle.iteration;
  return {{"schema_version", kSchemaVersion}, {"case", case_to_json(f.case_data)}, {"bundle", bundle}, {"flags", f.flags}};
}

FinalCase final_from_json(const json& j, const std::string& path) {
  util::ObjectReader r(j, path);
  check_version(r);
  FinalCase f;
  f.case_data = case_from_json(r.object("case"), r.child("case"));
  json bundle = r.object("bundle");
  const auto where = r.child("bundle");
  if (!bundle.contains("iteration") || !bundle["iteration"].is_number_unsigned()) util::schema_error(where + "/iteration", "expected an iteration count");
  const auto iteration = bundle["iteration"].get<std::size_t>();
  bundle.erase("iteration");
  f.bundle = bundle_payload_from_json(bundle, iteration, false, where);
  for (const auto& flag : r.array("flags")) {
    if (!flag.is_string()) util::schema_error(r.child("flags"), "flags must be strings");
    f.flags.push_back(flag.get<std::string>());
  }
  r.finish();
  return f;
}

std::vector<FinalCase> read_finals(std::string_view jsonl) {
  std::vector<FinalCase> out;
  const auto docs = parse_jsonl(jsonl);
  for (std::size_t i = 0; i < docs.size(); ++i) out.push_back(final_from_json(docs[i], "/" + std::to_string(i)));
  return out;
}

std::string_view to_string(Benchmark b) noexcept {
  switch (b) {
    case Benchmark::Text: return "ComplaintScene-Text";
    case Benchmark::MM: return "ComplaintScene-MM";
    case Benchmark::CfpbProduct: return "CFPB-Product";
    case Benchmark::CfpbIssue: return "CFPB-Issue";
  }
  return "?";
}

std::optional<Benchmark> parse_benchmark(std::string_view s) noexcept {
  for (auto b : {Benchmark::Text, Benchmark::MM, Benchmark::CfpbProduct, Benchmark::CfpbIssue}) {
    if (to_string(b) == s) return b;
  }
  return std::nullopt;
}

json record_to_json(const BenchRecord& r) {
  json out{{"schema_version", kSchemaVersion},
           {"record_id", r.record_id},
           {"benchmark", to_string(r.benchmark)},
           {"base_case_id", r.base_case_id},
           {"graph_id", r.graph_id},
           {"split", eval::to_string(r.split)},
           {"complaint_type", r.complaint_type},
           {"variant", r.variant},
           {"inputs", r.inputs}};
  if (r.qa) out["qa"] = qa_to_json(*r.qa);
  if (r.label) out["label"] = *r.label;
  return out;
}

BenchRecord record_from_json(const json& j, const std::string& path) {
  util::ObjectReader r(j, path);
  check_version(r);
  BenchRecord rec;
  rec.record_id = r.nonempty("record_id");
  const auto bench = r.string("benchmark");
  const auto b = parse_benchmark(bench);
  if (!b) util::schema_error(r.child("benchmark"), "unknown benchmark '" + bench + "'");
  rec.benchmark = *b;
  rec.base_case_id = r.nonempty("base_case_id");
  rec.graph_id = r.string("graph_id");
  const auto split = r.string("split");
  const auto s = eval::parse_split(split);
  if (!s) util::schema_error(r.child("split"), "unknown split '" + split + "'");
  rec.split = *s;
  rec.complaint_type = r.string("complaint_type");
  rec.variant = r.boolean("variant");
  rec.inputs = r.object("inputs");
  if (const auto* qa = r.optional("qa")) rec.qa = qa_from_json(*qa, r.child("qa"));
  rec.label = r.opt_string("label");
  r.finish();
  const bool scene = rec.benchmark == Benchmark::Text || rec.benchmark == Benchmark::MM;
  if (scene && !rec.qa) util::schema_error(r.child("qa"), "scene benchmark records need a question");
  if (!scene && !rec.label) util::schema_error(r.child("label"), "CFPB records need a label");
  if (rec.benchmark == Benchmark::MM && (!rec.inputs.contains("assets") || rec.inputs["assets"].empty())) {
    util::schema_error(r.child("inputs/assets"), "multimodal records carry at least one asset");
  }
  if (rec.benchmark == Benchmark::Text && rec.inputs.contains("assets")) {
    util::schema_error(r.child("inputs/assets"), "text records carry no assets");
  }
  return rec;
}

std::string to_jsonl(const std::vector<json>& docs) {
  std::string out;
  for (const auto& d : docs) {
    out += util::dump_canonical(d);
    out += '\n';
  }
  return out;
}

std::vector<json> parse_jsonl(std::string_view text) {
  std::vector<json> out;
  std::size_t line_no = 0;
  for (const auto& line : util::split(text, '\n')) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    try {
      out.push_back(util::parse_json(line));
    } catch (const Error& e) {
      json details = e.details();
      details["line"] = line_no;
      throw Error(e.code(), std::string(e.what()) + " (line " + std::to_string(line_no) + ")", details);
    }
  }
  return out;
}

std::string records_to_jsonl(std::span<const BenchRecord> records) {
  std::vector<json> docs;
  docs.reserve(records.size());
  for (const auto& r : records) docs.push_back(record_to_json(r));
  return to_jsonl(docs);
}

std::vector<BenchRecord> read_bench(std::string_view jsonl) {
  std::vector<BenchRecord> out;
  const auto docs = parse_jsonl(jsonl);
  for (std::size_t i = 0; i < docs.size(); ++i) out.push_back(record_from_json(docs[i], "/" + std::to_string(i)));
  return out;
}

std::vector<SceneItem> expand_finals(std::span<const FinalCase> finals, const BuildOptions& opts,
                                     std::vector<RejectedEdit>* rejected) {
  if (opts.generalize && opts.rules == nullptr) throw Error(Errc::BadRequest, "generalization needs a rule set");
  std::vector<SceneItem> out;
  for (const auto& f : finals) {
    out.push_back({&f, f.bundle.graph, f.bundle.description, false});
    if (!opts.generalize || !f.bundle.graph || opts.variants_per_case == 0) continue;
    const auto& g = *f.bundle.graph;
    std::size_t available = 0;
    for (auto t : rules::kAllEditTargets) available += rules::admissible_values(g, t).size();
    const auto n = std::min(available, opts.variants_per_case);
    if (n == 0) continue;
    const auto requests = rules::sample_edits(g, n, util::stable_hash64(std::to_string(opts.seed) + "|edits|" + g.graph_id));
    for (const auto& req : requests) {
      try {
        auto v = rules::generalize(g, *opts.rules, req, {.coordinate = opts.coordinate});
        auto description = render_scene_description(v.graph);
        out.push_back({&f, std::optional<SceneKnowledgeGraph>(std::move(v.graph)), std::move(description), true});
      } catch (const Error& e) {
        if (e.code() != Errc::UnsatisfiableEdit && e.code() != Errc::IdenticalVariant) throw;
        if (rejected != nullptr) rejected->push_back({g.graph_id, req, e.code(), std::string(e.what())});
      }
    }
  }
  return out;
}

std::vector<QAItem> select_text_qa(const SceneItem& item, const BuildOptions& opts) {
  const auto id = item.graph ? item.graph->graph_id : item.description.graph_id;
  return select_qa(kTextSubtasks, kTextThirdQuestion, "text-qa:" + id, item.graph,
                   item.variant ? nullptr : &item.base->bundle.qa, opts.seed);
}

std::vector<QAItem> select_mm_qa(const FinalCase& f, const BuildOptions& opts) {
  return select_qa(kMmSubtasks, kMmThirdQuestion, "mm-qa:" + f.case_data.case_id, f.bundle.graph, &f.bundle.qa, opts.seed);
}

std::vector<BenchRecord> build_text_bench(std::span<const SceneItem> items, const BuildOptions& opts) {
  std::vector<BenchRecord> out;
  for (const auto& item : items) {
    const auto& base_id = item.base->case_data.case_id;
    const auto split = eval::assign_split(base_id, opts.ratios, opts.split_seed);
    for (auto& q : select_text_qa(item, opts)) {
      BenchRecord r;
      r.record_id = "text:" + q.qa_id;
      r.benchmark = Benchmark::Text;
      r.base_case_id = base_id;
      r.graph_id = q.graph_id;
      r.split = split;
      r.complaint_type = complaint_type_of(*item.base, item.graph);
      r.variant = item.variant;
      r.inputs = {{"text", item.description.text}};
      r.qa = std::move(q);
      out.push_back(std::move(r));
    }
  }
  return out;
}

json mm_inputs(const ComplaintCase& c) {
  return {{"narrative", c.narrative},
          {"assets", asset_refs(c)},
          {"metadata", attrs_to_json(c.metadata)},
          {"history_summary", history_summary(c)}};
}

std::string history_summary(const ComplaintCase& c, std::size_t n) {
  const auto first = c.history.size() > n ? c.history.size() - n : 0;
  std::string out;
  for (std::size_t i = first; i < c.history.size(); ++i) {
    const auto& h = c.history[i];
    out += h.timestamp.to_string() + " " + std::string(to_string(h.actor)) + ": " + h.text + "\n";
  }
  return out;
}

std::vector<BenchRecord> build_mm_bench(std::span<const FinalCase> finals, const BuildOptions& opts) {
  std::vector<BenchRecord> out;
  for (const auto& f : finals) {
    if (f.case_data.evidence_assets.empty()) continue;
    const auto split = eval::assign_split(f.case_data.case_id, opts.ratios, opts.split_seed);
    const auto inputs = mm_inputs(f.case_data);
    for (auto& q : select_mm_qa(f, opts)) {
      BenchRecord r;
      r.record_id = "mm:" + q.qa_id;
      r.benchmark = Benchmark::MM;
      r.base_case_id = f.case_data.case_id;
      r.graph_id = q.graph_id;
      r.split = split;
      r.complaint_type = complaint_type_of(f, f.bundle.graph);
      r.inputs = inputs;
      r.qa = std::move(q);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<BenchRecord> build_cfpb_bench(const CfpbIngest& ingest, Benchmark which, const BuildOptions& opts) {
  if (which != Benchmark::CfpbProduct && which != Benchmark::CfpbIssue) {
    throw Error(Errc::BadRequest, "not a CFPB benchmark: " + std::string(to_string(which)));
  }
  std::vector<BenchRecord> out;
  for (const auto& c : ingest.cases) {
    const auto& labels = ingest.labels.at(c.case_id);
    BenchRecord r;
    r.record_id = std::string(which == Benchmark::CfpbProduct ? "product:" : "issue:") + c.case_id;
    r.benchmark = which;
    r.base_case_id = c.case_id;
    r.split = eval::assign_split(c.case_id, opts.ratios, opts.split_seed);
    r.inputs = {{"narrative", c.narrative}};
    r.label = which == Benchmark::CfpbProduct ? labels.product : labels.issue;
    out.push_back(std::move(r));
  }
  return out;
}

std::string_view to_string(CorpusStage s) noexcept {
  switch (s) {
    case CorpusStage::Pt: return "pt";
    case CorpusStage::Sft: return "sft";
    case CorpusStage::Mm: return "mm";
  }
  return "?";
}

std::optional<CorpusStage> parse_corpus_stage(std::string_view s) noexcept {
  for (auto x : {CorpusStage::Pt, CorpusStage::Sft, CorpusStage::Mm}) {
    if (to_string(x) == s) return x;
  }
  return std::nullopt;
}

std::string render_question(const QAItem& q) {
  std::string out = q.question + "\n";
  for (const auto& o : q.options) out += o.label + ". " + o.text + "\n";
  return out;
}

std::vector<json> emit_training_corpus(std::span<const SceneItem> items, std::span<const FinalCase> finals,
                                       CorpusStage stage, const BuildOptions& opts) {
  std::vector<json> out;
  if (stage == CorpusStage::Mm) {
    for (const auto& f : finals) {
      const auto split = eval::assign_split(f.case_data.case_id, opts.ratios, opts.split_seed);
      for (const auto& q : select_mm_qa(f, opts)) {
        out.push_back({{"schema_version", kSchemaVersion},
                       {"record_id", "mm:" + q.qa_id},
                       {"base_case_id", f.case_data.case_id},
                       {"split", eval::to_string(split)},
                       {"narrative", f.case_data.narrative},
                       {"assets", asset_refs(f.case_data)},
                       {"metadata", attrs_to_json(f.case_data.metadata)},
                       {"question", render_question(q)},
                       {"response", q.gold().text}});
      }
    }
    return out;
  }
  for (const auto& item : items) {
    const auto& base_id = item.base->case_data.case_id;
    const auto split = eval::to_string(eval::assign_split(base_id, opts.ratios, opts.split_seed));
    const auto graph_id = item.graph ? item.graph->graph_id : item.description.graph_id;
    const auto qa = select_text_qa(item, opts);
    if (stage == CorpusStage::Pt) {
      std::string doc = item.description.text;
      for (const auto& q : qa) doc += "\n" + render_question(q) + "Answer: " + q.gold().text + "\n";
      out.push_back({{"schema_version", kSchemaVersion},
                     {"record_id", "pt:" + graph_id},
                     {"base_case_id", base_id},
                     {"graph_id", graph_id},
                     {"split", split},
                     {"text", doc}});
      continue;
    }
    for (const auto& q : qa) {
      out.push_back({{"schema_version", kSchemaVersion},
                     {"record_id", "sft:" + q.qa_id},
                     {"base_case_id", base_id},
                     {"graph_id", graph_id},
                     {"split", split},
                     {"subtask", to_string(q.subtask)},
                     {"instruction", render_question(q)},
                     {"context", item.description.text},
                     {"response", q.gold().text}});
    }
  }
  return out;
}

}  // namespace skg::corpus

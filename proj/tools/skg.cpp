// skg: command-line front end for graphs, synthesis, corpora, evaluation and
// the review service.

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "skg/core/serialize.hpp"
#include "skg/core/validate.hpp"
#include "skg/corpus/bench.hpp"
#include "skg/corpus/cfpb.hpp"
#include "skg/corpus/corrupt.hpp"
#include "skg/corpus/scene.hpp"
#include "skg/error.hpp"
#include "skg/eval/runner.hpp"
#include "skg/review/server.hpp"
#include "skg/review/service.hpp"
#include "skg/rules/evaluate.hpp"
#include "skg/rules/generalize.hpp"
#include "skg/rules/parser.hpp"
#include "skg/synth/llm.hpp"
#include "skg/synth/loop.hpp"
#include "skg/synth/mock.hpp"
#include "skg/util/digest.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace skg;

namespace {

rules::ConstraintSet load_rules(const std::string& path) { return rules::parse_rules(util::read_file(path)); }

std::vector<SceneKnowledgeGraph> read_graph_lines(const std::string& path) {
  std::vector<SceneKnowledgeGraph> out;
  for (const auto& line : util::split(util::read_file(path), '\n')) {
    if (!util::trim(line).empty()) out.push_back(parse_graph(line));
  }
  return out;
}

void write_or_print(const std::string& path, std::string_view bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes;
  } else {
    util::write_file(path, bytes);
  }
}

std::vector<ComplaintCase> read_case_dir(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".case") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ComplaintCase> out;
  for (const auto& f : files) out.push_back(parse_case(util::read_file(f.string())));
  return out;
}

std::pair<std::string, int> split_listen(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::BadRequest, "--listen expects host:port");
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

std::atomic<skg::review::ReviewServer*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene knowledge graph toolkit"};
  app.require_subcommand(1);

  // validate
  std::string graph_path, rules_path;
  auto* validate = app.add_subcommand("validate", "Check a graph's structure and, with --rules, its consistency");
  validate->add_option("graph", graph_path, "Graph file (.skg)")->required();
  validate->add_option("--rules", rules_path, "Rule set (.skgr)");

  // canon
  std::string out_path;
  auto* canon = app.add_subcommand("canon", "Print the canonical form of a graph");
  canon->add_option("graph", graph_path, "Graph file (.skg)")->required();
  canon->add_option("-o,--out", out_path, "Output file (default stdout)");

  // generalize
  std::size_t n_variants = rules::kDefaultVariantsPerCase;
  std::uint64_t seed = 0;
  bool no_partition = false, no_generalize = false;
  auto* gen = app.add_subcommand("generalize", "Derive rule-consistent variants of a graph");
  gen->add_option("graph", graph_path, "Graph file (.skg)")->required();
  gen->add_option("--rules", rules_path, "Rule set (.skgr)")->required();
  gen->add_option("-n", n_variants, "Number of edit requests");
  gen->add_option("--seed", seed, "Sampling seed");
  gen->add_flag("--no-partition", no_partition, "Primary edits only, no coordinated repairs");
  gen->add_option("-o,--out", out_path, "Output stream (.skgl, default stdout)");

  // gen-cases
  std::size_t n_cases = 10;
  std::string out_dir;
  auto* gen_cases = app.add_subcommand("gen-cases", "Write synthetic complaint cases");
  gen_cases->add_option("-n", n_cases, "Number of cases");
  gen_cases->add_option("--seed", seed, "Population seed");
  gen_cases->add_option("--out", out_dir, "Output directory")->required();

  // scene
  auto* scene = app.add_subcommand("scene", "Derive the scene graph of a case that carries scene metadata");
  scene->add_option("case", graph_path, "Case file (.case)")->required();
  scene->add_option("-o,--out", out_path, "Output file (default stdout)");

  // synth
  std::string cases_dir, templates_dir, ablate, endpoint, model_name = "complaint-scene-generator", store_dir;
  std::size_t k_max = 3, workers = 1, mock_defects = 0;
  bool mock = false, llm_judge = false, no_early_stop = false, review_all = false;
  std::int64_t tokens_per_minute = 0;
  auto* synth = app.add_subcommand("synth", "Run the generate/verify/refine loop over cases");
  synth->add_option("--cases", cases_dir, "Directory of .case files")->required();
  synth->add_option("--rules", rules_path, "Rule set (.skgr)")->required();
  synth->add_option("--templates", templates_dir, "Prompt template directory")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--k-max", k_max, "Bundle budget per case");
  synth->add_option("--workers", workers, "Parallel cases");
  synth->add_option("--ablate", ablate, "skip_verification,skip_graph,skip_policy_nodes");
  synth->add_option("--endpoint", endpoint, "Chat-completions URL");
  synth->add_option("--model", model_name, "Model name sent to the endpoint");
  synth->add_option("--tokens-per-minute", tokens_per_minute, "Token budget (0 = unlimited)");
  synth->add_flag("--mock", mock, "Use the deterministic scene mock instead of an endpoint");
  synth->add_option("--mock-defects", mock_defects, "Defective mock answers per case");
  synth->add_flag("--llm-judge", llm_judge, "Ask the model to verify as well");
  synth->add_flag("--no-early-stop", no_early_stop, "Always spend the full bundle budget");
  synth->add_option("--store", store_dir, "Review store to ingest outcomes into");
  synth->add_flag("--review-all", review_all, "Queue finals for review too, not only escalations");

  // build-bench
  std::string finals_path, cfpb_csv;
  std::uint64_t split_seed = 0;
  auto* build = app.add_subcommand("build-bench", "Build benchmark streams from synthesis finals");
  build->add_option("--finals", finals_path, "finals.jsonl from synth")->required();
  build->add_option("--rules", rules_path, "Rule set (.skgr)")->required();
  build->add_option("--out", out_dir, "Output directory")->required();
  build->add_option("--seed", seed, "Generalization and QA seed");
  build->add_option("--split-seed", split_seed, "Split seed");
  build->add_flag("--no-generalize", no_generalize, "Base graphs only");
  build->add_flag("--no-partition", no_partition, "Primary edits only, no coordinated repairs");
  build->add_option("--cfpb", cfpb_csv, "CFPB export to add the classification benchmarks");

  // emit-corpus
  std::string stage_name;
  auto* emit = app.add_subcommand("emit-corpus", "Emit a training corpus stage");
  emit->add_option("--finals", finals_path, "finals.jsonl from synth")->required();
  emit->add_option("--rules", rules_path, "Rule set (.skgr)")->required();
  emit->add_option("--stage", stage_name, "pt, sft or mm")->required()->check(CLI::IsMember({"pt", "sft", "mm"}));
  emit->add_option("-o,--out", out_path, "Output stream (default stdout)");
  emit->add_option("--seed", seed, "Generalization and QA seed");
  emit->add_option("--split-seed", split_seed, "Split seed");
  emit->add_flag("--no-generalize", no_generalize, "Base graphs only");
  emit->add_flag("--no-partition", no_partition, "Primary edits only, no coordinated repairs");

  // corrupt
  std::string case_path, targets = "assets";
  double level = 0.1;
  auto* corrupt = app.add_subcommand("corrupt", "Remove a seeded fraction of a case's evidence");
  corrupt->add_option("case", case_path, "Case file (.case)")->required();
  corrupt->add_option("--level", level, "Fraction in [0, 1]");
  corrupt->add_option("--seed", seed, "Corruption seed");
  corrupt->add_option("--targets", targets, "assets, metadata or both")
      ->check(CLI::IsMember({"assets", "metadata", "both"}));
  corrupt->add_option("-o,--out", out_path, "Output file (default stdout)");

  // ingest-cfpb
  std::size_t limit = 0;
  auto* ingest = app.add_subcommand("ingest-cfpb", "Turn a CFPB export into cases and classification benchmarks");
  ingest->add_option("csv", cfpb_csv, "CFPB complaints CSV")->required();
  ingest->add_option("--out", out_dir, "Output directory")->required();
  ingest->add_option("--limit", limit, "Rows to read (0 = all)");
  ingest->add_option("--split-seed", split_seed, "Split seed");

  // eval
  std::string bench_path, replay_path, report_path, csv_path, slices = "full", graphs_path, preds_out,
                                                               eval_split = "test";
  std::uint64_t corruption_seed = 0;
  double rare_threshold = eval::kRareThreshold;
  auto* ev = app.add_subcommand("eval", "Score a model or a replay file on a benchmark stream");
  ev->add_option("--bench", bench_path, "Benchmark stream")->required();
  ev->add_option("--rules", rules_path, "Rule set (.skgr)")->required();
  auto* ep = ev->add_option("--model-endpoint", endpoint, "Chat-completions URL");
  auto* rp = ev->add_option("--replay", replay_path, "Predictions file {record_id, answer, slice?}");
  ep->excludes(rp);
  ev->add_option("--model", model_name, "Model name sent to the endpoint");
  ev->add_option("--slices", slices, "full,corrupt_10,corrupt_30,rare");
  ev->add_option("--report", report_path, "Report output (.json)")->required();
  ev->add_option("--csv", csv_path, "CSV export");
  ev->add_option("--graphs", graphs_path, "Graph stream (.skgl) for policy consistency");
  ev->add_option("--predictions-out", preds_out, "Write predictions in replay format");
  ev->add_option("--eval-split", eval_split, "train, dev, test or all")
      ->check(CLI::IsMember({"train", "dev", "test", "all"}));
  ev->add_option("--workers", workers, "Parallel requests");
  ev->add_option("--corruption-seed", corruption_seed, "Seed of the corrupted slices");
  ev->add_option("--rare-threshold", rare_threshold, "Rare-type cutoff as a fraction of train records");

  // serve
  std::string listen = "127.0.0.1:8080", tokens_path, ui_dir;
  int lease_minutes = 60;
  auto* serve = app.add_subcommand("serve", "Run the review API");
  serve->add_option("--store", store_dir, "Store root")->required();
  serve->add_option("--rules", rules_path, "Rule set (.skgr)")->required();
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--tokens", tokens_path, "Token file")->required();
  serve->add_option("--ui", ui_dir, "Static UI bundle served under /ui/");
  serve->add_option("--lease-minutes", lease_minutes, "Claim lease");
  serve->add_flag("--review-all", review_all, "Review every final, not only escalations");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const auto g = parse_graph(util::read_file(graph_path));
      const auto v = validate_graph(g);
      json out{{"graph_id", g.graph_id}, {"valid", v.ok()}, {"structural", json::array()}};
      for (const auto& s : v.violations) out["structural"].push_back({{"code", s.code}, {"refs", s.refs}, {"message", s.message}});
      bool ok = v.ok();
      if (!rules_path.empty()) {
        const auto rs = load_rules(rules_path);
        out["violations"] = json::array();
        for (const auto& x : rules::evaluate(g, rs)) out["violations"].push_back(rules::violation_to_json(x));
        out["consistent"] = rules::is_consistent(g, rs);
        ok = ok && out["consistent"].get<bool>();
      }
      std::cout << out.dump(2) << "\n";
      return ok ? 0 : 1;
    }

    if (*canon) {
      write_or_print(out_path, canonicalize(parse_graph(util::read_file(graph_path))));
      return 0;
    }

    if (*gen) {
      const auto g = parse_graph(util::read_file(graph_path));
      const auto rs = load_rules(rules_path);
      std::string out;
      std::size_t rejected = 0;
      for (const auto& req : rules::sample_edits(g, n_variants, seed)) {
        try {
          out += canonicalize(rules::generalize(g, rs, req, {.coordinate = !no_partition}).graph) + "\n";
        } catch (const Error& e) {
          ++rejected;
          std::cerr << rules::to_string(req.target) << "=" << req.value << ": " << to_string(e.code()) << ": "
                    << e.what() << "\n";
        }
      }
      write_or_print(out_path, out);
      std::cerr << "variants: " << (n_variants - rejected) << ", rejected: " << rejected << "\n";
      return 0;
    }

    if (*gen_cases) {
      fs::create_directories(out_dir);
      for (std::size_t i = 0; i < n_cases; ++i) {
        const auto c = corpus::synthetic_case(i, seed);
        util::write_file((fs::path(out_dir) / (c.case_id + ".case")).string(), canonicalize_case(c));
      }
      return 0;
    }

    if (*scene) {
      write_or_print(out_path, canonicalize(corpus::scene_from_case(parse_case(util::read_file(graph_path)))) + "\n");
      return 0;
    }

    if (*synth) {
      const auto cases = read_case_dir(cases_dir);
      const auto rs = load_rules(rules_path);
      const auto templates = synth::templates_from(synth::load_templates(templates_dir));
      synth::LoopConfig loop;
      loop.k_max = k_max;
      loop.early_stop = !no_early_stop;
      loop.llm_judge = llm_judge;
      if (!ablate.empty()) loop.toggles = synth::parse_ablations(ablate);
      synth::LlmClientConfig cfg;
      cfg.model_name = model_name;
      if (!endpoint.empty()) cfg.endpoint_url = endpoint;

      std::unique_ptr<synth::LlmClient> base;
      if (mock) {
        std::map<std::string, ComplaintCase> by_id;
        for (const auto& c : cases) by_id[c.case_id] = c;
        base = std::make_unique<synth::SceneMockClient>(std::move(by_id), mock_defects);
      } else {
        if (endpoint.empty()) throw Error(Errc::BadRequest, "synth needs --endpoint or --mock");
        base = std::make_unique<synth::HttpLlmClient>(cfg);
      }
      synth::ThrottledClient client(*base, std::max<std::size_t>(1, workers), tokens_per_minute);

      fs::create_directories(out_dir);
      const auto trace_path = (fs::path(out_dir) / "trace.tracel").string();
      util::write_file(trace_path, "");
      synth::TraceWriter trace(trace_path);
      const auto outcomes = synth::run_batch(cases, templates, rs, cfg, client, loop, workers, &trace);

      std::vector<json> finals, escalated;
      std::map<std::size_t, std::size_t> k_hist;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        if (o.is_final()) {
          finals.push_back(corpus::final_to_json({cases[i], *o.final, o.flags}));
          ++k_hist[o.final->iteration];
        } else {
          escalated.push_back({{"case_id", o.case_id},
                               {"reason", o.reason},
                               {"bundles", o.bundles.size()},
                               {"flags", o.flags}});
        }
      }
      util::write_file((fs::path(out_dir) / "finals.jsonl").string(), corpus::to_jsonl(finals));
      util::write_file((fs::path(out_dir) / "escalated.jsonl").string(), corpus::to_jsonl(escalated));
      json hist = json::object();
      for (const auto& [k, n] : k_hist) hist[std::to_string(k)] = n;
      const json summary{{"cases", cases.size()}, {"final", finals.size()}, {"escalated", escalated.size()},
                         {"final_by_iteration", hist}, {"peak_concurrency", client.peak_concurrency()}};
      util::write_file((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");

      if (!store_dir.empty()) {
        review::Store store(store_dir);
        review::ServiceConfig scfg;
        scfg.mode = review_all ? review::ReviewMode::All : review::ReviewMode::EscalatedOnly;
        review::ReviewService service(store, rs, scfg);
        std::size_t queued = 0;
        for (std::size_t i = 0; i < outcomes.size(); ++i) queued += service.ingest_outcome(cases[i], outcomes[i]).has_value();
        std::cerr << "review tasks queued: " << queued << "\n";
      }
      std::cerr << "final: " << finals.size() << ", escalated: " << escalated.size() << "\n";
      return 0;
    }

    if (*build || *emit) {
      const auto finals = corpus::read_finals(util::read_file(finals_path));
      const auto rs = load_rules(rules_path);
      corpus::BuildOptions opts;
      opts.seed = seed;
      opts.split_seed = split_seed;
      opts.rules = &rs;
      opts.generalize = !no_generalize;
      opts.coordinate = !no_partition;
      std::vector<corpus::RejectedEdit> rejected;
      const auto items = corpus::expand_finals(finals, opts, &rejected);

      if (*emit) {
        const auto stage = *corpus::parse_corpus_stage(stage_name);
        write_or_print(out_path, corpus::to_jsonl(corpus::emit_training_corpus(items, finals, stage, opts)));
        return 0;
      }

      fs::create_directories(out_dir);
      const auto dir = fs::path(out_dir);
      util::write_file((dir / "bench_text.jsonl").string(), corpus::records_to_jsonl(corpus::build_text_bench(items, opts)));
      util::write_file((dir / "bench_mm.jsonl").string(), corpus::records_to_jsonl(corpus::build_mm_bench(finals, opts)));
      std::string graphs;
      for (const auto& it : items) {
        if (it.graph) graphs += canonicalize(*it.graph) + "\n";
      }
      util::write_file((dir / "graphs.skgl").string(), graphs);
      std::vector<json> rej;
      for (const auto& r : rejected) {
        rej.push_back({{"graph_id", r.graph_id},
                       {"target", rules::to_string(r.request.target)},
                       {"value", r.request.value},
                       {"error_code", to_string(r.code)},
                       {"message", r.message}});
      }
      util::write_file((dir / "rejected.jsonl").string(), corpus::to_jsonl(rej));
      if (!cfpb_csv.empty()) {
        const auto ing = corpus::ingest_cfpb_file(cfpb_csv);
        util::write_file((dir / "cfpb_product.jsonl").string(),
                         corpus::records_to_jsonl(corpus::build_cfpb_bench(ing, corpus::Benchmark::CfpbProduct, opts)));
        util::write_file((dir / "cfpb_issue.jsonl").string(),
                         corpus::records_to_jsonl(corpus::build_cfpb_bench(ing, corpus::Benchmark::CfpbIssue, opts)));
      }
      std::cerr << "graphs: " << items.size() << ", rejected edits: " << rejected.size() << "\n";
      return 0;
    }

    if (*corrupt) {
      corpus::CorruptionSpec spec;
      spec.level = level;
      spec.seed = seed;
      spec.targets = targets == "assets"     ? corpus::CorruptionTarget::EvidenceAssets
                     : targets == "metadata" ? corpus::CorruptionTarget::MetadataFields
                                             : corpus::CorruptionTarget::Both;
      write_or_print(out_path, canonicalize_case(corpus::corrupt_evidence(parse_case(util::read_file(case_path)), spec)));
      return 0;
    }

    if (*ingest) {
      const auto ing = corpus::ingest_cfpb_file(cfpb_csv, limit);
      const auto dir = fs::path(out_dir);
      fs::create_directories(dir / "cases");
      for (const auto& c : ing.cases) util::write_file((dir / "cases" / (c.case_id + ".case")).string(), canonicalize_case(c));
      corpus::BuildOptions opts;
      opts.split_seed = split_seed;
      util::write_file((dir / "cfpb_product.jsonl").string(),
                       corpus::records_to_jsonl(corpus::build_cfpb_bench(ing, corpus::Benchmark::CfpbProduct, opts)));
      util::write_file((dir / "cfpb_issue.jsonl").string(),
                       corpus::records_to_jsonl(corpus::build_cfpb_bench(ing, corpus::Benchmark::CfpbIssue, opts)));
      std::cerr << "cases: " << ing.cases.size() << ", skipped without narrative: " << ing.skipped << "\n";
      return 0;
    }

    if (*ev) {
      const auto rules_text = util::read_file(rules_path);
      const auto rs = rules::parse_rules(rules_text);
      const auto bench = corpus::read_bench(util::read_file(bench_path));

      std::map<std::string, SceneKnowledgeGraph> graphs;
      if (!graphs_path.empty()) {
        for (auto& g : read_graph_lines(graphs_path)) graphs.emplace(g.graph_id, std::move(g));
      }
      eval::GraphLookup lookup;
      if (!graphs.empty()) {
        lookup = [&](const std::string& id) -> const SceneKnowledgeGraph* {
          const auto it = graphs.find(id);
          return it == graphs.end() ? nullptr : &it->second;
        };
      }

      eval::EvalOptions opts;
      opts.slices = eval::parse_slices(slices);
      opts.eval_split = eval_split == "all" ? std::nullopt : eval::parse_split(eval_split);
      opts.corruption_seed = corruption_seed;
      opts.rare_threshold = rare_threshold;
      opts.workers = std::max<std::size_t>(1, workers);
      opts.rules_digest = util::sha256_hex(rules_text);

      std::unique_ptr<eval::Predictor> predictor;
      std::unique_ptr<synth::HttpLlmClient> http;
      std::unique_ptr<synth::ThrottledClient> throttled;
      if (!replay_path.empty()) {
        predictor = std::make_unique<eval::ReplayPredictor>(util::read_file(replay_path));
      } else if (!endpoint.empty()) {
        synth::LlmClientConfig cfg;
        cfg.endpoint_url = endpoint;
        cfg.model_name = model_name;
        http = std::make_unique<synth::HttpLlmClient>(cfg);
        throttled = std::make_unique<synth::ThrottledClient>(*http, opts.workers);
        predictor = std::make_unique<eval::ModelPredictor>(*throttled, model_name);
      } else {
        throw Error(Errc::BadRequest, "eval needs --model-endpoint or --replay");
      }

      const auto run = eval::run_eval(bench, *predictor, rs, lookup, opts);
      const auto config = eval::eval_config(bench, *predictor, opts);
      util::write_file(report_path, eval::report_to_json(run.reports, config).dump(2) + "\n");
      if (!csv_path.empty()) util::write_file(csv_path, eval::report_to_csv(run.reports));
      if (!preds_out.empty()) util::write_file(preds_out, eval::predictions_to_jsonl(run, bench));
      return 0;
    }

    if (*serve) {
      const auto [host, port] = split_listen(listen);
      review::Store store(store_dir);
      review::ServiceConfig scfg;
      scfg.lease = std::chrono::minutes(lease_minutes);
      scfg.mode = review_all ? review::ReviewMode::All : review::ReviewMode::EscalatedOnly;
      review::ReviewService service(store, load_rules(rules_path), scfg);
      review::ServerOptions sopts;
      if (!ui_dir.empty()) sopts.ui_dir = ui_dir;
      review::ReviewServer server(service, review::TokenTable::load(tokens_path), sopts);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ":" << bound << "\n";
      server.run();
      g_server = nullptr;
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    if (!e.details().empty()) std::cerr << e.details().dump(2) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

#include "skg/eval/metrics.hpp"

#include <map>
#include <set>

#include "skg/error.hpp"
#include "skg/rules/evaluate.hpp"

namespace skg::eval {

using boost::multiprecision::cpp_int;

Score parse_score(std::string_view text) {
  const auto d = Decimal::parse(text);
  if (!d) throw Error(Errc::SyntaxError, "not a decimal score: " + std::string(text));
  cpp_int denom = 1;
  for (int i = 0; i < d->scale(); ++i) denom *= 10;
  return Score(cpp_int(d->mantissa()), denom);
}

std::string format_score(const Score& s, int digits) {
  cpp_int scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const bool negative = s < 0;
  const Score mag = negative ? Score(-s) : s;
  const Score scaled = mag * scale;
  // floor(x + 1/2) on a non-negative rational.
  const cpp_int twice_num = 2 * boost::multiprecision::numerator(scaled) + boost::multiprecision::denominator(scaled);
  const cpp_int rounded = twice_num / (2 * boost::multiprecision::denominator(scaled));
  std::string whole = cpp_int(rounded / scale).str();
  std::string frac = cpp_int(rounded % scale).str();
  if (digits > 0) frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  std::string out = (negative && rounded != 0) ? "-" : "";
  out += whole;
  if (digits > 0) out += "." + frac;
  return out;
}

double to_double(const Score& s) { return s.convert_to<double>(); }

namespace {

void check_aligned(std::size_t a, std::size_t b) {
  if (a != b) throw Error(Errc::LengthMismatch, "predictions and golds differ in length", {{"preds", a}, {"golds", b}});
  if (a == 0) throw Error(Errc::EmptyInput, "no predictions to score");
}

void check_range(const Score& s, const char* name) {
  if (s < 0 || s > 100) {
    throw Error(Errc::OutOfRange, std::string(name) + " must lie in [0, 100]", {{"value", format_score(s, 4)}});
  }
}

}  // namespace

Score accuracy(std::span<const std::string> preds, std::span<const std::string> golds) {
  check_aligned(preds.size(), golds.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i];
  return Score(cpp_int(hits), cpp_int(preds.size()));
}

Score macro_f1(std::span<const std::string> preds, std::span<const std::string> golds,
               std::span<const std::string> label_set) {
  check_aligned(preds.size(), golds.size());
  const std::set<std::string> labels(label_set.begin(), label_set.end());
  if (labels.empty()) throw Error(Errc::EmptyInput, "empty label set");
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts> counts;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) {
      ++counts[golds[i]].tp;
    } else {
      ++counts[preds[i]].fp;
      ++counts[golds[i]].fn;
    }
  }
  Score sum = 0;
  for (const auto& label : labels) {
    const auto it = counts.find(label);
    if (it == counts.end()) continue;
    // F1 = 2TP / (2TP + FP + FN); zero when TP is zero.
    const auto& c = it->second;
    if (c.tp == 0) continue;
    sum += Score(cpp_int(2 * c.tp), cpp_int(2 * c.tp + c.fp + c.fn));
  }
  return sum / Score(cpp_int(labels.size()));
}

Score avg_text(const Score& evidence, const Score& policy, const Score& action) {
  check_range(evidence, "evidence score");
  check_range(policy, "policy score");
  check_range(action, "action score");
  return (evidence + policy + action) / 3;
}

Score avg_mm(const Score& routing, const Score& responsibility, const Score& resolution) {
  check_range(routing, "routing score");
  check_range(responsibility, "responsibility score");
  check_range(resolution, "resolution score");
  return (routing + responsibility + resolution) / 3;
}

SceneKnowledgeGraph substitute_action(const SceneKnowledgeGraph& g, DecisionAction a) {
  SceneKnowledgeGraph out = g;
  for (auto& n : out.nodes) {
    if (n.kind != NodeKind::Decision) continue;
    const auto* fin = n.attr("final");
    if (fin && fin->is_bool() && fin->as_bool()) n.attributes["action"] = Value(std::string(to_string(a)));
  }
  out.scene_dims[SceneDim::ResolutionAction] = std::string(to_string(a));
  return out;
}

Score policy_consistency(std::span<const PcItem> items, const GraphLookup& graphs, const rules::ConstraintSet& c) {
  if (items.empty()) throw Error(Errc::EmptyInput, "no predictions for policy consistency");
  std::size_t consistent = 0;
  for (const auto& item : items) {
    const auto* g = graphs(item.graph_id);
    if (!g) throw Error(Errc::GraphNotFound, "unknown graph: " + item.graph_id, {{"graph_id", item.graph_id}});
    if (item.abstained) continue;
    if (!item.action) throw Error(Errc::MissingAction, "prediction carries no action", {{"graph_id", item.graph_id}});
    consistent += rules::is_consistent(substitute_action(*g, *item.action), c);
  }
  return Score(cpp_int(consistent), cpp_int(items.size()));
}

std::vector<std::size_t> rare_type_filter(std::span<const TypedRecord> records, double threshold) {
  std::map<std::string, std::size_t> freq;
  std::size_t train = 0;
  for (const auto& r : records) {
    if (!r.train) continue;
    ++train;
    ++freq[r.complaint_type];
  }
  const double cutoff = threshold * static_cast<double>(train);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto it = freq.find(records[i].complaint_type);
    const std::size_t n = it == freq.end() ? 0 : it->second;
    if (n == 0 || static_cast<double>(n) < cutoff) out.push_back(i);
  }
  return out;
}

}  // namespace skg::eval

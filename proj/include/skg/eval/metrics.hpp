#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "skg/core/graph.hpp"
#include "skg/rules/ast.hpp"

namespace skg::eval {

/// Exact score. Rounded only when a report is written.
using Score = boost::multiprecision::cpp_rational;

/// Exact value of a decimal literal such as "68.95". Throws SyntaxError.
Score parse_score(std::string_view text);
/// Half-up rounding to `digits` decimals, rendered with exactly that many.
std::string format_score(const Score& s, int digits = 2);
double to_double(const Score& s);

/// matches / N. Throws LengthMismatch or EmptyInput.
Score accuracy(std::span<const std::string> preds, std::span<const std::string> golds);
/// Unweighted mean of per-label F1 over label_set; a label with
/// precision + recall = 0 contributes 0.
Score macro_f1(std::span<const std::string> preds, std::span<const std::string> golds,
               std::span<const std::string> label_set);

/// Mean of evidence, policy and action scores on the 0-100 scale.
Score avg_text(const Score& evidence, const Score& policy, const Score& action);
/// Mean of routing, responsibility and resolution scores on the 0-100 scale.
Score avg_mm(const Score& routing, const Score& responsibility, const Score& resolution);

struct PcItem {
  std::string graph_id;
  std::optional<DecisionAction> action;
  /// Unparseable answer: counts toward N with c_i = 0.
  bool abstained = false;
};

using GraphLookup = std::function<const SceneKnowledgeGraph*(const std::string& graph_id)>;

/// The graph with its final decision (and resolution_action dim) set to `a`.
SceneKnowledgeGraph substitute_action(const SceneKnowledgeGraph& g, DecisionAction a);

/// Fraction of items whose action, substituted into their graph, leaves the
/// graph consistent. Throws EmptyInput, MissingAction, GraphNotFound.
Score policy_consistency(std::span<const PcItem> items, const GraphLookup& graphs, const rules::ConstraintSet& c);

inline constexpr double kRareThreshold = 0.005;

struct TypedRecord {
  std::string complaint_type;
  bool train = false;
};

/// Indices of records whose complaint type occurs in fewer than
/// threshold * |train| train records, or in none.
std::vector<std::size_t> rare_type_filter(std::span<const TypedRecord> records, double threshold = kRareThreshold);

}  // namespace skg::eval

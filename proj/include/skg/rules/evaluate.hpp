#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/core/graph.hpp"
#include "skg/rules/ast.hpp"

namespace skg::rules {

struct Violation {
  std::string rule_id;
  Severity severity = Severity::Blocking;
  /// Node and edge ids that witnessed the antecedent, sorted.
  std::vector<std::string> refs;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// {rule_id, severity, refs, message}.
nlohmann::json violation_to_json(const Violation& v);

struct Truth {
  bool holds = false;
  std::vector<std::string> witnesses;  // sorted, unique
};

/// Truth of one atom with the elements that satisfy it.
Truth eval_atom(const SceneKnowledgeGraph& g, const Atom& atom);
Truth eval_expr(const SceneKnowledgeGraph& g, const Expr& e);

/// Implication check per rule: a rule is violated when its antecedent holds
/// and its consequent does not. One Violation per violated rule, in rule
/// order.
std::vector<Violation> evaluate(const SceneKnowledgeGraph& g, const ConstraintSet& rules);

/// True iff no blocking rule is violated.
bool is_consistent(const SceneKnowledgeGraph& g, const ConstraintSet& rules);

/// Rules whose atoms never mention the given node kind.
ConstraintSet without_kind(const ConstraintSet& rules, NodeKind kind);

bool mentions_kind(const Expr& e, NodeKind kind);
bool mentions_decision(const Expr& e);

}  // namespace skg::rules

#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "skg/core/types.hpp"
#include "skg/core/value.hpp"

namespace skg::rules {

enum class Comparator { Eq, Ne, Lt, Le, Gt, Ge, In };
enum class Severity { Blocking, Advisory };

std::string_view to_string(Comparator c) noexcept;
std::string_view to_string(Severity s) noexcept;

// A literal is one scalar, or a value set (only valid with `in`).
struct Literal {
  std::vector<Value> values;
  bool is_set = false;

  friend bool operator==(const Literal&, const Literal&) = default;
};

/// kind(attr cmp value): some node of `kind` has attribute `key` satisfying the
/// comparison.
struct NodeAttrIs {
  NodeKind kind = NodeKind::Entity;
  std::string key;
  Comparator cmp = Comparator::Eq;
  Literal value;
  friend bool operator==(const NodeAttrIs&, const NodeAttrIs&) = default;
};

/// edge(relation, src_kind, dst_kind): some edge of that relation joins the
/// two kinds.
struct EdgeExists {
  RelationType relation = RelationType::Supports;
  NodeKind src_kind = NodeKind::Evidence;
  NodeKind dst_kind = NodeKind::Event;
  friend bool operator==(const EdgeExists&, const EdgeExists&) = default;
};

/// decision cmp action: tests the final Decision node's action.
struct DecisionIs {
  Comparator cmp = Comparator::Eq;
  std::vector<DecisionAction> actions;
  friend bool operator==(const DecisionIs&, const DecisionIs&) = default;
};

/// dim(scene_dim cmp value).
struct DimIs {
  SceneDim dim = SceneDim::ComplaintType;
  Comparator cmp = Comparator::Eq;
  Literal value;
  friend bool operator==(const DimIs&, const DimIs&) = default;
};

using Atom = std::variant<NodeAttrIs, EdgeExists, DecisionIs, DimIs>;

struct Expr {
  enum class Op { Atom, And, Or };

  Op op = Op::Atom;
  bool negated = false;  // only on atoms
  std::optional<Atom> atom;
  std::vector<Expr> children;

  static Expr leaf(Atom a, bool negated = false);
  static Expr all_of(std::vector<Expr> children);
  static Expr any_of(std::vector<Expr> children);

  friend bool operator==(const Expr&, const Expr&) = default;
};

struct ConstraintRule {
  std::string rule_id;
  std::string description;
  Expr antecedent;
  Expr consequent;
  Severity severity = Severity::Blocking;

  friend bool operator==(const ConstraintRule&, const ConstraintRule&) = default;
};

struct ConstraintSet {
  std::vector<ConstraintRule> rules;

  const ConstraintRule* find(std::string_view rule_id) const;
  bool empty() const noexcept { return rules.empty(); }

  /// Rules of both sets; ids from `other` that already exist are skipped.
  ConstraintSet merged_with(const ConstraintSet& other) const;

  friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;
};

/// Calls f on every atom of an expression, with its negation flag.
template <typename F>
void for_each_atom(const Expr& e, F&& f) {
  if (e.op == Expr::Op::Atom) {
    f(*e.atom, e.negated);
    return;
  }
  for (const auto& c : e.children) for_each_atom(c, f);
}

}  // namespace skg::rules

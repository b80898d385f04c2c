#include "skg/rules/ast.hpp"

#include <algorithm>

namespace skg::rules {

std::string_view to_string(Comparator c) noexcept {
  switch (c) {
    case Comparator::Eq: return "=";
    case Comparator::Ne: return "!=";
    case Comparator::Lt: return "<";
    case Comparator::Le: return "<=";
    case Comparator::Gt: return ">";
    case Comparator::Ge: return ">=";
    case Comparator::In: return "in";
  }
  return "?";
}

std::string_view to_string(Severity s) noexcept { return s == Severity::Blocking ? "blocking" : "advisory"; }

Expr Expr::leaf(Atom a, bool negated) {
  Expr e;
  e.op = Op::Atom;
  e.negated = negated;
  e.atom = std::move(a);
  return e;
}

Expr Expr::all_of(std::vector<Expr> children) {
  if (children.size() == 1) return std::move(children.front());
  Expr e;
  e.op = Op::And;
  e.children = std::move(children);
  return e;
}

Expr Expr::any_of(std::vector<Expr> children) {
  if (children.size() == 1) return std::move(children.front());
  Expr e;
  e.op = Op::Or;
  e.children = std::move(children);
  return e;
}

const ConstraintRule* ConstraintSet::find(std::string_view rule_id) const {
  const auto it = std::find_if(rules.begin(), rules.end(), [&](const auto& r) { return r.rule_id == rule_id; });
  return it == rules.end() ? nullptr : &*it;
}

ConstraintSet ConstraintSet::merged_with(const ConstraintSet& other) const {
  ConstraintSet out = *this;
  for (const auto& r : other.rules) {
    if (out.find(r.rule_id) == nullptr) out.rules.push_back(r);
  }
  return out;
}

}  // namespace skg::rules

#include "skg/rules/evaluate.hpp"

#include <algorithm>
#include <set>

namespace skg::rules {

nlohmann::json violation_to_json(const Violation& v) {
  return {{"rule_id", v.rule_id}, {"severity", to_string(v.severity)}, {"refs", v.refs}, {"message", v.message}};
}

namespace {

bool compare(const Value& actual, Comparator cmp, const Literal& lit) {
  const auto eq = [&](const Value& v) { return compare_values(actual, v) == std::partial_ordering::equivalent; };
  switch (cmp) {
    case Comparator::Eq: return eq(lit.values.front());
    case Comparator::Ne: return !eq(lit.values.front());
    case Comparator::In: return std::any_of(lit.values.begin(), lit.values.end(), eq);
    case Comparator::Lt: return compare_values(actual, lit.values.front()) == std::partial_ordering::less;
    case Comparator::Le: {
      const auto o = compare_values(actual, lit.values.front());
      return o == std::partial_ordering::less || o == std::partial_ordering::equivalent;
    }
    case Comparator::Gt: return compare_values(actual, lit.values.front()) == std::partial_ordering::greater;
    case Comparator::Ge: {
      const auto o = compare_values(actual, lit.values.front());
      return o == std::partial_ordering::greater || o == std::partial_ordering::equivalent;
    }
  }
  return false;
}

Truth from_witnesses(std::vector<std::string> w) {
  std::sort(w.begin(), w.end());
  w.erase(std::unique(w.begin(), w.end()), w.end());
  Truth t;
  t.holds = !w.empty();
  t.witnesses = std::move(w);
  return t;
}

}  // namespace

Truth eval_atom(const SceneKnowledgeGraph& g, const Atom& atom) {
  return std::visit(
      [&](const auto& a) -> Truth {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, NodeAttrIs>) {
          std::vector<std::string> w;
          for (const auto& n : g.nodes) {
            if (n.kind != a.kind) continue;
            const Value* v = n.attr(a.key);
            if (v != nullptr && compare(*v, a.cmp, a.value)) w.push_back(n.node_id);
          }
          return from_witnesses(std::move(w));
        } else if constexpr (std::is_same_v<T, EdgeExists>) {
          std::vector<std::string> w;
          for (const auto& e : g.edges) {
            if (e.relation != a.relation) continue;
            const SkgNode* s = g.find_node(e.src);
            const SkgNode* d = g.find_node(e.dst);
            if (s != nullptr && d != nullptr && s->kind == a.src_kind && d->kind == a.dst_kind) w.push_back(e.edge_id);
          }
          return from_witnesses(std::move(w));
        } else if constexpr (std::is_same_v<T, DecisionIs>) {
          const SkgNode* d = g.final_decision();
          const auto action = g.final_action();
          if (d == nullptr || !action) return {};
          const bool listed = std::find(a.actions.begin(), a.actions.end(), *action) != a.actions.end();
          const bool holds = a.cmp == Comparator::Ne ? !listed : listed;
          if (!holds) return {};
          return {true, {d->node_id}};
        } else {
          const auto v = g.dim(a.dim);
          if (!v) return {};
          Truth t;
          t.holds = compare(Value(*v), a.cmp, a.value);
          return t;
        }
      },
      atom);
}

Truth eval_expr(const SceneKnowledgeGraph& g, const Expr& e) {
  if (e.op == Expr::Op::Atom) {
    auto t = eval_atom(g, *e.atom);
    if (e.negated) return {!t.holds, {}};
    return t;
  }
  std::set<std::string> refs;
  bool holds = e.op == Expr::Op::And;
  for (const auto& c : e.children) {
    const auto t = eval_expr(g, c);
    if (e.op == Expr::Op::And) {
      if (!t.holds) return {};
    } else if (!t.holds) {
      continue;
    }
    holds = true;
    refs.insert(t.witnesses.begin(), t.witnesses.end());
  }
  return {holds, {refs.begin(), refs.end()}};
}

std::vector<Violation> evaluate(const SceneKnowledgeGraph& g, const ConstraintSet& rules) {
  std::vector<Violation> out;
  for (const auto& r : rules.rules) {
    const auto ante = eval_expr(g, r.antecedent);
    if (!ante.holds) continue;
    if (eval_expr(g, r.consequent).holds) continue;
    out.push_back({r.rule_id, r.severity, ante.witnesses,
                   "rule " + r.rule_id + " (" + std::string(to_string(r.severity)) +
                       "): condition holds but requirement fails"});
  }
  return out;
}

bool is_consistent(const SceneKnowledgeGraph& g, const ConstraintSet& rules) {
  for (const auto& r : rules.rules) {
    if (r.severity != Severity::Blocking) continue;
    if (eval_expr(g, r.antecedent).holds && !eval_expr(g, r.consequent).holds) return false;
  }
  return true;
}

bool mentions_kind(const Expr& e, NodeKind kind) {
  bool found = false;
  for_each_atom(e, [&](const Atom& a, bool) {
    if (const auto* n = std::get_if<NodeAttrIs>(&a); n != nullptr && n->kind == kind) found = true;
    if (const auto* x = std::get_if<EdgeExists>(&a); x != nullptr && (x->src_kind == kind || x->dst_kind == kind)) {
      found = true;
    }
    if (kind == NodeKind::Decision && std::holds_alternative<DecisionIs>(a)) found = true;
  });
  return found;
}

bool mentions_decision(const Expr& e) { return mentions_kind(e, NodeKind::Decision); }

ConstraintSet without_kind(const ConstraintSet& rules, NodeKind kind) {
  ConstraintSet out;
  for (const auto& r : rules.rules) {
    if (!mentions_kind(r.antecedent, kind) && !mentions_kind(r.consequent, kind)) out.rules.push_back(r);
  }
  return out;
}

}  // namespace skg::rules

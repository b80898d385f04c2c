#pragma once

#include <string>
#include <string_view>

#include "skg/rules/ast.hpp"

namespace skg::rules {

/// Parses rule-DSL source (`.skgr`). Comment lines directly above a RULE
/// become its description. Errors carry line and column in details().
ConstraintSet parse_rules(std::string_view source);

/// Source text that parses back to an equal ConstraintSet.
std::string print_rules(const ConstraintSet& set);
std::string print_expr(const Expr& e);

}  // namespace skg::rules

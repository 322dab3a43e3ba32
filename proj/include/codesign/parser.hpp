#pragma once

#include <map>
#include <string>
#include <string_view>

#include "codesign/catalog.hpp"
#include "codesign/expr.hpp"
#include "codesign/spec.hpp"

namespace codesign {

// Named scalar constants usable as bare identifiers in expressions.
using ParamMap = std::map<std::string, double, std::less<>>;

// Infix expressions over
//   feat(module, feature[, multiplier])   multiplier * [F_module]_feature x_module
//   sel(module[, {c1, c2, ...}])          sum of the selected indicator entries
//   log(e)  sqrt(e)  e^p  * / + -  numbers  (parenthesised) parameter names
// Module, feature and component names are bare identifiers ([A-Za-z_][\w.]*)
// or double-quoted strings. Exponents must be constant; they are stored as
// exact fractions.
Expr parse_expr(std::string_view text, const DesignSpace& space,
                const ParamMap& params = {});

// "[label:] lhs (<= | >= | == | =) rhs". Relations are normalised to
// lhs' <= rhs' or lhs' == rhs' with a constant right-hand side.
Constraint parse_constraint(std::string_view text, const DesignSpace& space,
                            const ParamMap& params = {},
                            ConstraintClass klass = ConstraintClass::kSystem,
                            const std::string& default_label = "");

// "[label:] expr" for a maximised objective.
Objective parse_objective(std::string_view text, const DesignSpace& space,
                          const ParamMap& params = {}, const std::string& default_label = "");

}  // namespace codesign

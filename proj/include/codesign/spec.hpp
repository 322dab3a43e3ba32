#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codesign/catalog.hpp"
#include "codesign/expr.hpp"

namespace codesign {

// Absolute tolerance for "equal" when comparing objective levels and for
// constraint satisfaction.
inline constexpr double kTolerance = 1e-9;

enum class Sense { kLessEqual, kEqual };
enum class ConstraintClass { kSystem, kImplicit };
enum class Polarity { kCompatible, kIncompatible };

// Named conservative replacements. They encode drone-specific physics and are
// attached only by the drone problem builder.
enum class SurrogateKind { kSpeedLowerBound, kIc4UpperBound, kFlightTimeUpperBound };

const char* to_string(SurrogateKind kind);
const char* to_string(Sense sense);
const char* to_string(ConstraintClass klass);

// surrogate.lhs <= surrogate.rhs implies the original constraint.
struct ConstraintSurrogate {
  SurrogateKind kind;
  Expr lhs;
  double rhs = 0.0;
};

// lhs (sense) rhs
struct Constraint {
  std::string label;
  Expr lhs;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
  ConstraintClass klass = ConstraintClass::kSystem;
  std::optional<ConstraintSurrogate> surrogate;
};

// surrogate.expr <= original wherever the surrogate's assumptions hold.
struct ObjectiveSurrogate {
  SurrogateKind kind;
  Expr expr;
};

// Maximized. Objectives are ordered by priority (lexicographic).
struct Objective {
  std::string label;
  Expr expr;
  std::optional<ObjectiveSurrogate> surrogate;
};

// Choosing `component` of module_a requires (compatible) or forbids
// (incompatible) a choice of module_b inside `subset`.
struct CompatRule {
  std::string label;
  std::size_t module_a = 0;
  std::size_t component = 0;
  std::size_t module_b = 0;
  std::vector<std::size_t> subset;
  Polarity polarity = Polarity::kIncompatible;
};

// Only components in `subset` may be chosen for `module`.
struct Restriction {
  std::string label;
  std::size_t module = 0;
  std::vector<std::size_t> subset;
};

struct DesignSpec {
  DesignSpace space;
  std::vector<Objective> objectives;
  std::vector<Constraint> constraints;
  std::vector<CompatRule> compat_rules;
  std::vector<Restriction> restrictions;
  // Optional scalar reported as "cost" by the sweep.
  std::optional<Expr> cost;

  // Throws SchemaError if objectives are empty or a rule references an
  // invalid module/component.
  void validate() const;
};

struct ConstraintStatus {
  std::string label;
  double value = 0.0;  // lhs for constraints, indicator sums for rules
  double slack = 0.0;  // >= 0 when satisfied
  bool satisfied = true;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<ConstraintStatus> entries;
};

// Exact check of every constraint, compatibility rule and restriction.
// Evaluation domain errors are rethrown with the constraint label.
FeasibilityReport check_feasible(const DesignSpec& spec, const DesignVector& x);

// Same decision as check_feasible(...).feasible, stopping at the first
// violation.
bool is_feasible(const DesignSpec& spec, const DesignVector& x);

// Exact objective vector (one value per priority level).
std::vector<double> evaluate_objectives(const DesignSpec& spec, const DesignVector& x);

// Compares objective vectors level by level; levels within `tol` are equal.
// Returns <0, 0, >0.
int lex_compare(std::span<const double> a, std::span<const double> b,
                double tol = kTolerance);

// Picks the lexicographic optimum out of candidates given in enumeration
// order: level by level, keep the candidates within `tol` of the level
// maximum; the first survivor (lowest component indices) wins. Returns the
// index of the winner, or nullopt for an empty list.
std::optional<std::size_t> lexicographic_argmax(
    const std::vector<std::vector<double>>& values, double tol = kTolerance);

struct OracleResult {
  bool feasible = false;
  DesignVector design;
  std::vector<double> objective_values;
  std::uint64_t designs_evaluated = 0;
  std::uint64_t feasible_count = 0;
};

// Exhaustive search of X under the exact nonlinear semantics.
OracleResult brute_force_optimum(const DesignSpec& spec,
                                 std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace codesign

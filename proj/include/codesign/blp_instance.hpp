#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "codesign/spec.hpp"

namespace codesign {

// One module's one-hot block of primary variables.
struct BlpBlock {
  std::string module_id;
  std::vector<std::string> component_names;
  bool optional = false;
  std::size_t offset = 0;  // index of the first variable

  std::size_t size() const { return component_names.size(); }
};

// Joint-choice cells of two or more modules. Cell index is mixed radix over
// `parents`, first parent most significant.
struct LiftedBlock {
  std::vector<std::size_t> parents;  // block indices, ascending
  std::size_t offset = 0;
  std::size_t cells = 0;
};

struct BlpVariable {
  std::string name;
  bool lifted = false;
  std::size_t block = 0;  // BlpBlock or LiftedBlock index
  std::size_t index = 0;  // component or cell
};

struct LinearTerm {
  std::size_t var;
  double coef;
};

enum class RowKind { kOneHot, kLinking, kConstraint, kCompat, kRestriction };

const char* to_string(RowKind kind);

struct BlpRow {
  std::string name;
  std::vector<LinearTerm> terms;  // ascending var, no duplicates
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
  RowKind kind = RowKind::kConstraint;
  std::string source;          // label of the originating objective/constraint/rule
  std::string transformation;  // lowering route that produced it
};

// Maximized: coefs . x + offset. The offset is reported, never optimised.
struct BlpObjective {
  std::string label;
  std::vector<double> coefs;  // one per variable
  double offset = 0.0;
};

// Binary linear program with one-hot block structure and a lexicographic
// objective stack (index 0 has the highest priority).
struct BlpInstance {
  std::vector<BlpBlock> blocks;
  std::vector<LiftedBlock> lifted;
  std::vector<BlpVariable> variables;
  std::vector<BlpRow> rows;
  std::vector<BlpObjective> objectives;

  std::size_t num_variables() const { return variables.size(); }

  // Checks the structural invariants: a one-hot row per block (= 1, or <= 1
  // for optional blocks), complete linking rows per lifted block, sorted
  // in-range row terms, objective lengths. Throws SchemaError.
  void validate() const;

  // Full 0/1 assignment from per-block choices (DesignVector::kNone for an
  // empty optional block); lifted cells are set from their parents.
  std::vector<std::uint8_t> assignment(const std::vector<int>& choices) const;

  double activity(const BlpRow& row, const std::vector<std::uint8_t>& values) const;
  bool satisfied(const BlpRow& row, const std::vector<std::uint8_t>& values,
                 double tol = kTolerance) const;
  double objective_value(std::size_t level, const std::vector<std::uint8_t>& values) const;
};

// Cell index of a lifted block for the given parent choices.
std::size_t lifted_cell(const BlpInstance& inst, const LiftedBlock& lb,
                        const std::vector<int>& choices);

}  // namespace codesign

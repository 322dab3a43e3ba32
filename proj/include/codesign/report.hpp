#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "codesign/blp.hpp"
#include "codesign/lower.hpp"
#include "codesign/problem_file.hpp"

namespace codesign {

struct SolveOutcome {
  LoweringResult lowered;
  BlpSolution solution;
  std::optional<DesignVector> design;  // set when an incumbent exists
};

// lower() then solve().
SolveOutcome solve_problem(const Problem& problem, const SolverConfig& config = {},
                           const LoweringOptions& lowering = {});

// Cross-check of a solve against enumeration.
//  lowered: exhaustive_optimum on the BLP must give the same status,
//           objective vector (1e-9) and, in deterministic mode, assignment.
//  exact:   brute force over the original spec. With an all-exact lowering
//           the exact objective vectors must agree; with surrogates the
//           returned design must be exactly feasible and not beat the
//           exact optimum.
struct OracleCheck {
  bool ran = false;
  bool agrees = true;
  std::string skipped_reason;
  std::vector<std::string> mismatches;
  std::uint64_t designs_evaluated = 0;
  std::uint64_t feasible_count = 0;
  std::optional<DesignVector> exact_design;
  std::vector<double> exact_objectives;
};

OracleCheck oracle_check(const Problem& problem, const SolveOutcome& outcome,
                         bool compare_assignment, std::uint64_t cap);

// Solution JSON. wall_time is written only when include_wall_time is set.
std::string solution_json(const Problem& problem, const SolveOutcome& outcome,
                          const OracleCheck* oracle, bool include_wall_time);

// Lowering report JSON (validate command).
std::string lowering_json(const Problem& problem, const LoweringReport& report);

// Solve of a bare LP file.
std::string lp_solution_json(const BlpInstance& instance, const BlpSolution& solution,
                             bool include_wall_time);

// Sweep CSV, format v1:
//   design_id,<module ids...>,<objective labels...>,cost,feasible
// design_id is the position in enumeration order; objective values are the
// exact (original) ones, nan where undefined; cost is nan without a cost
// expression; feasible is 1/0 under the original constraints.
struct SweepOptions {
  std::uint64_t cap = kDefaultEnumerationCap;
  std::optional<std::uint64_t> sample;  // uniform sample without replacement
  std::uint64_t seed = 0;
};

struct SweepSummary {
  std::uint64_t rows = 0;
  std::uint64_t feasible = 0;
};

// Throws CapacityError when the space exceeds the cap and no sample is set.
SweepSummary write_sweep_csv(const DesignSpec& spec, const SweepOptions& options,
                             std::ostream& out);

// Design with the given enumeration index (first module most significant,
// the empty choice of an optional module first).
DesignVector design_at(const DesignSpace& space, std::uint64_t index);

}  // namespace codesign

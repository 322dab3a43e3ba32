#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "codesign/blp_instance.hpp"

namespace codesign {

enum class Branching {
  kMostConstrained,  // fewest surviving components first
  kIndexOrder,       // blocks in declaration order
};

struct SolverConfig {
  double time_limit = std::numeric_limits<double>::infinity();  // seconds
  std::uint64_t node_limit = std::numeric_limits<std::uint64_t>::max();
  double absolute_gap_tolerance = 1e-9;
  Branching branching = Branching::kMostConstrained;
  // Adds a final pass that returns the lowest component-index tuple among
  // the lexicographic optima; identical inputs give identical assignments.
  bool deterministic = true;

  void validate() const;
};

enum class SolveStatus { kOptimal, kInfeasible, kLimitReached };

const char* to_string(SolveStatus s);

struct BlpSolution {
  SolveStatus status = SolveStatus::kInfeasible;
  bool has_incumbent = false;
  std::vector<int> choices;                // per block; DesignVector::kNone for empty optional
  std::vector<std::uint8_t> values;        // every variable, lifted cells included
  std::vector<double> objective_values;    // per level, offsets included
  std::uint64_t node_count = 0;
  double wall_time = 0.0;
  std::vector<double> row_slack;           // rhs - activity, or -|activity - rhs| for equalities
};

BlpSolution solve(const BlpInstance& instance, const SolverConfig& config = {});

// Per-block surviving components. none_alive is only ever true for
// optional blocks.
struct Domains {
  std::vector<std::vector<char>> alive;
  std::vector<char> none_alive;

  static Domains full(const BlpInstance& instance);
  bool fixed(std::size_t block) const;
  std::size_t count(std::size_t block) const;  // none counted
};

inline constexpr int kUnfixed = -2;

// Separable bound on objective `level` (offset included): per block the best
// surviving coefficient (0 for an empty optional block), per lifted block
// the best cell consistent with the parents. `partial` fixes blocks to a
// component (or kNone); kUnfixed leaves a block free.
double root_bound(const BlpInstance& instance, std::size_t level,
                  const std::vector<int>& partial = {});
double separable_bound(const BlpInstance& instance, std::size_t level, const Domains& domains);

// Bound consistency over every non-structural row, equalities as two <=
// rows. Returns nullopt on conflict.
std::optional<Domains> propagate(const BlpInstance& instance, Domains domains);

// Lowered-problem oracle by full enumeration: the same lexicographic rule as
// brute_force_optimum, evaluated on rows and objective rows only.
BlpSolution exhaustive_optimum(const BlpInstance& instance,
                               std::uint64_t cap = 10'000'000);

std::vector<double> row_slack(const BlpInstance& instance, const std::vector<std::uint8_t>& values);

}  // namespace codesign

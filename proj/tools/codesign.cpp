// codesign command-line front end.
//
// Exit codes: 0 optimal / ok, 1 parse, schema or lowering error, 2 infeasible,
// 3 limit reached, 4 oracle mismatch, 5 sweep above the enumeration cap.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "codesign/error.hpp"
#include "codesign/lp_format.hpp"
#include "codesign/report.hpp"

using namespace codesign;

namespace {

enum Exit { kOk = 0, kError = 1, kInfeasible = 2, kLimit = 3, kOracle = 4, kCap = 5 };

struct Common {
  std::string path;
  std::vector<std::string> params;
  std::size_t lifting_cap = kDefaultLiftingCap;
};

struct SolveFlags {
  bool deterministic = false;
  double time_limit = std::numeric_limits<double>::infinity();
  std::uint64_t node_limit = std::numeric_limits<std::uint64_t>::max();
  std::string export_lp;
  std::string export_provenance;
  bool oracle = false;
};

Problem load(const Common& c) {
  ParamOverrides overrides;
  for (const auto& p : c.params) overrides.push_back(parse_param_override(p));
  return load_problem(c.path, overrides);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("error writing '" + path + "'");
}

int status_exit(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return kOk;
    case SolveStatus::kInfeasible: return kInfeasible;
    case SolveStatus::kLimitReached: return kLimit;
  }
  return kError;
}

SolverConfig solver_config(const SolveFlags& f) {
  SolverConfig cfg;
  cfg.time_limit = f.time_limit;
  cfg.node_limit = f.node_limit;
  cfg.deterministic = f.deterministic;
  return cfg;
}

int cmd_solve(const Common& c, const SolveFlags& f) {
  Problem problem = load(c);
  LoweringOptions lo;
  lo.lifting_cap = c.lifting_cap;
  SolveOutcome outcome;
  outcome.lowered = lower(problem.spec, lo);
  if (!f.export_lp.empty()) write_file(f.export_lp, write_lp(outcome.lowered.instance));
  if (!f.export_provenance.empty()) {
    write_file(f.export_provenance, provenance_json(outcome.lowered.instance, outcome.lowered.report));
  }
  outcome.solution = solve(outcome.lowered.instance, solver_config(f));
  if (outcome.solution.has_incumbent) outcome.design = DesignVector(outcome.solution.choices);

  std::optional<OracleCheck> oracle;
  if (f.oracle) {
    oracle = oracle_check(problem, outcome, f.deterministic, enumeration_cap_from_env());
    if (!oracle->ran) std::cerr << "oracle skipped: " << oracle->skipped_reason << "\n";
  }
  std::cout << solution_json(problem, outcome, oracle ? &*oracle : nullptr, !f.deterministic);
  if (oracle && !oracle->agrees) {
    for (const auto& m : oracle->mismatches) std::cerr << "oracle mismatch: " << m << "\n";
    return kOracle;
  }
  return status_exit(outcome.solution.status);
}

int cmd_validate(const Common& c) {
  Problem problem = load(c);
  LoweringOptions lo;
  lo.lifting_cap = c.lifting_cap;
  LoweringResult r = lower(problem.spec, lo);
  std::cout << lowering_json(problem, r.report);
  return kOk;
}

int cmd_sweep(const Common& c, std::optional<std::uint64_t> sample, std::uint64_t seed) {
  Problem problem = load(c);
  SweepOptions opt;
  opt.cap = enumeration_cap_from_env();
  opt.sample = sample;
  opt.seed = seed;
  // Buffer so that a cap error leaves stdout empty.
  std::ostringstream buf;
  SweepSummary s = write_sweep_csv(problem.spec, opt, buf);
  std::cout << buf.str();
  std::cerr << s.rows << " designs, " << s.feasible << " feasible\n";
  return kOk;
}

int cmd_solve_lp(const std::string& path, const SolveFlags& f) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  BlpInstance inst = read_lp(ss.str());
  BlpSolution sol = solve(inst, solver_config(f));
  std::cout << lp_solution_json(inst, sol, !f.deterministic);
  if (f.oracle) {
    BlpSolution ref = exhaustive_optimum(inst, enumeration_cap_from_env());
    bool same = ref.status == sol.status && ref.objective_values.size() == sol.objective_values.size();
    for (std::size_t k = 0; same && k < ref.objective_values.size(); ++k) {
      same = std::abs(ref.objective_values[k] - sol.objective_values[k]) <= 1e-9 * (1 + std::abs(ref.objective_values[k]));
    }
    if (!same) {
      std::cerr << "oracle mismatch: enumeration status " << to_string(ref.status) << "\n";
      return kOracle;
    }
  }
  return status_exit(sol.status);
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("problem", c.path, "problem file (TOML)")->required();
  app->add_option("--param", c.params, "override a scalar parameter, key=value")->take_all();
  app->add_option("--lifting-cap", c.lifting_cap, "max joint-choice cells per lifted table");
}

void add_solve_flags(CLI::App* app, SolveFlags& f) {
  app->add_flag("--deterministic", f.deterministic,
                "lowest-index tie-break and byte-stable output (no wall_time)");
  app->add_option("--time-limit", f.time_limit, "seconds")->check(CLI::PositiveNumber);
  app->add_option("--node-limit", f.node_limit, "search nodes")->check(CLI::PositiveNumber);
  app->add_flag("--oracle", f.oracle, "cross-check against brute-force enumeration");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Catalog-based robot co-design: lower, solve, sweep"};
  app.require_subcommand(1);
  Common common;
  SolveFlags flags;

  auto* solve_cmd = app.add_subcommand("solve", "lower and solve; solution JSON on stdout");
  add_common(solve_cmd, common);
  add_solve_flags(solve_cmd, flags);
  solve_cmd->add_option("--export-lp", flags.export_lp, "write the lowered program as LP text");
  solve_cmd->add_option("--export-provenance", flags.export_provenance, "write row provenance JSON");

  auto* validate_cmd = app.add_subcommand("validate", "print the lowering report");
  add_common(validate_cmd, common);

  std::uint64_t sample = 0, seed = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate every design; CSV on stdout");
  add_common(sweep_cmd, common);
  auto* sample_opt = sweep_cmd->add_option("--sample", sample, "evaluate N random designs")
                         ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed", seed, "sampling seed");

  std::string lp_path;
  auto* lp_cmd = app.add_subcommand("solve-lp", "solve an LP file with binary variables");
  lp_cmd->add_option("lp", lp_path, "LP file")->required();
  add_solve_flags(lp_cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kError;
  }

  try {
    if (*solve_cmd) return cmd_solve(common, flags);
    if (*validate_cmd) return cmd_validate(common);
    if (*sweep_cmd) {
      return cmd_sweep(common, *sample_opt ? std::optional<std::uint64_t>(sample) : std::nullopt, seed);
    }
    if (*lp_cmd) return cmd_solve_lp(lp_path, flags);
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return *sweep_cmd ? kCap : kError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

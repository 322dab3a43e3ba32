#include "codesign/report.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include <json.hpp>

#include "codesign/error.hpp"

namespace codesign {

using ordered = nlohmann::ordered_json;

SolveOutcome solve_problem(const Problem& problem, const SolverConfig& config,
                           const LoweringOptions& lowering) {
  SolveOutcome out;
  out.lowered = lower(problem.spec, lowering);
  out.solution = solve(out.lowered.instance, config);
  if (out.solution.has_incumbent) out.design = DesignVector(out.solution.choices);
  return out;
}

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b))); }

std::optional<double> try_eval(const Expr& e, const DesignSpace& space, const DesignVector& x) {
  try {
    double v = evaluate(e, space, x);
    if (std::isfinite(v)) return v;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

std::string design_string(const DesignSpace& space, const DesignVector& x) {
  std::string s;
  for (std::size_t i = 0; i < space.num_modules(); ++i) {
    if (i) s += ", ";
    s += space.module(i).module_id() + "=";
    s += x.selected(i) ? space.module(i).component_names()[x.choice(i)] : "none";
  }
  return s;
}

ordered number_or_null(std::optional<double> v) { return v ? ordered(*v) : ordered(nullptr); }

ordered lowering_entries(const LoweringReport& report) {
  ordered arr = ordered::array();
  for (const auto& e : report.entries) {
    ordered j;
    j["label"] = e.label;
    j["role"] = e.role;
    j["transformation"] = to_string(e.transformation);
    j["exactness"] = to_string(e.exactness);
    if (e.surrogate) j["surrogate"] = to_string(*e.surrogate);
    j["rows"] = e.rows;
    if (!e.note.empty()) j["note"] = e.note;
    arr.push_back(j);
  }
  return arr;
}

}  // namespace

OracleCheck oracle_check(const Problem& problem, const SolveOutcome& outcome,
                         bool compare_assignment, std::uint64_t cap) {
  OracleCheck check;
  const auto& spec = problem.spec;
  const auto& inst = outcome.lowered.instance;
  const auto& sol = outcome.solution;
  if (sol.status == SolveStatus::kLimitReached) {
    check.skipped_reason = "solver stopped at a limit";
    return check;
  }
  if (spec.space.design_count() > cap) {
    check.skipped_reason = "design space has " + std::to_string(spec.space.design_count()) +
                           " designs, above the enumeration cap " + std::to_string(cap);
    return check;
  }
  check.ran = true;
  auto fail = [&](std::string msg) {
    check.agrees = false;
    check.mismatches.push_back(std::move(msg));
  };

  // Lowered problem.
  BlpSolution ref = exhaustive_optimum(inst, cap);
  if (ref.status != sol.status) {
    fail(std::string("lowered status: solver ") + to_string(sol.status) + ", enumeration " +
         to_string(ref.status));
  } else if (sol.status == SolveStatus::kOptimal) {
    for (std::size_t k = 0; k < ref.objective_values.size(); ++k) {
      if (!close(ref.objective_values[k], sol.objective_values[k])) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "lowered objective '%s': solver %.17g, enumeration %.17g",
                      inst.objectives[k].label.c_str(), sol.objective_values[k], ref.objective_values[k]);
        fail(buf);
      }
    }
    if (compare_assignment && ref.choices != sol.choices) {
      fail("lowered assignment differs from the enumeration tie-break: " +
           design_string(spec.space, DesignVector(ref.choices)));
    }
  }

  // Original problem.
  OracleResult exact = brute_force_optimum(spec, cap);
  check.designs_evaluated = exact.designs_evaluated;
  check.feasible_count = exact.feasible_count;
  if (exact.feasible) {
    check.exact_design = exact.design;
    check.exact_objectives = exact.objective_values;
  }
  bool all_exact = outcome.lowered.report.all_exact();
  if (sol.status == SolveStatus::kOptimal) {
    const DesignVector& x = *outcome.design;
    bool feasible = false;
    try {
      feasible = is_feasible(spec, x);
    } catch (const DomainError&) {
    }
    if (!feasible) fail("returned design violates the original constraints");
    if (!exact.feasible) {
      fail("original problem has no feasible design but the lowered one is solved");
    } else if (feasible) {
      std::vector<double> got;
      try {
        got = evaluate_objectives(spec, x);
      } catch (const DomainError& e) {
        fail(std::string("objective undefined at the returned design: ") + e.what());
      }
      if (!got.empty()) {
        int cmp = lex_compare(got, exact.objective_values);
        if (all_exact && cmp != 0) {
          fail("exact objective vector differs from the brute-force optimum (" +
               design_string(spec.space, exact.design) + ")");
        } else if (cmp > 0) {
          fail("returned design beats the brute-force optimum");
        }
      }
    }
  } else if (sol.status == SolveStatus::kInfeasible && exact.feasible && all_exact) {
    fail("lowered problem infeasible but the original has feasible design " +
         design_string(spec.space, exact.design));
  }
  return check;
}

std::string solution_json(const Problem& problem, const SolveOutcome& outcome,
                          const OracleCheck* oracle, bool include_wall_time) {
  const auto& spec = problem.spec;
  const auto& space = spec.space;
  const auto& sol = outcome.solution;
  ordered j;
  j["problem"] = problem.name;
  j["status"] = to_string(sol.status);
  if (outcome.design) {
    const DesignVector& x = *outcome.design;
    ordered design = ordered::object();
    for (std::size_t i = 0; i < space.num_modules(); ++i) {
      const auto& m = space.module(i);
      design[m.module_id()] = x.selected(i) ? ordered(m.component_names()[x.choice(i)]) : ordered(nullptr);
    }
    j["design"] = design;

    ordered objectives = ordered::array();
    for (std::size_t k = 0; k < spec.objectives.size(); ++k) {
      const auto& o = spec.objectives[k];
      ordered oj;
      oj["label"] = o.label;
      oj["lowered"] = sol.objective_values[k];
      if (o.surrogate) oj["surrogate"] = number_or_null(try_eval(o.surrogate->expr, space, x));
      oj["exact"] = number_or_null(try_eval(o.expr, space, x));
      objectives.push_back(oj);
    }
    j["objectives"] = objectives;
    if (spec.cost) j["cost"] = number_or_null(try_eval(*spec.cost, space, x));

    ordered constraints = ordered::array();
    bool feasible = true;
    try {
      FeasibilityReport fr = check_feasible(spec, x);
      feasible = fr.feasible;
      for (const auto& e : fr.entries) {
        ordered c;
        c["label"] = e.label;
        c["value"] = e.value;
        c["slack"] = e.slack;
        c["satisfied"] = e.satisfied;
        constraints.push_back(c);
      }
    } catch (const DomainError& e) {
      feasible = false;
      j["feasibility_error"] = e.what();
    }
    j["feasible_exact"] = feasible;
    j["constraints"] = constraints;

    if (problem.transport) {
      auto robots = transport_robots(space, x);
      ordered team;
      team["size"] = robots.size();
      team["max_size"] = transport_team_size(spec);
      int sensorless = 0;
      ordered list = ordered::array();
      for (const auto& r : robots) {
        ordered rj;
        rj["robot"] = r.index;
        rj["frame"] = r.frame;
        rj["motor"] = r.motor;
        rj["battery"] = r.battery;
        rj["sensor"] = r.sensor.empty() ? ordered(nullptr) : ordered(r.sensor);
        if (r.sensor.empty()) ++sensorless;
        list.push_back(rj);
      }
      team["sensorless_carriers"] = sensorless;
      team["robots"] = list;
      j["team"] = team;
    }
  } else {
    j["design"] = nullptr;
  }
  j["node_count"] = sol.node_count;
  if (include_wall_time) j["wall_time"] = sol.wall_time;
  j["lowering"] = lowering_entries(outcome.lowered.report);
  if (oracle) {
    ordered oj;
    oj["ran"] = oracle->ran;
    if (!oracle->ran) oj["skipped"] = oracle->skipped_reason;
    oj["agrees"] = oracle->agrees;
    if (oracle->ran) {
      oj["designs_evaluated"] = oracle->designs_evaluated;
      oj["feasible_designs"] = oracle->feasible_count;
      if (oracle->exact_design) {
        ordered d = ordered::object();
        for (std::size_t i = 0; i < space.num_modules(); ++i) {
          const auto& m = space.module(i);
          int c = oracle->exact_design->choice(i);
          d[m.module_id()] = c == DesignVector::kNone ? ordered(nullptr) : ordered(m.component_names()[c]);
        }
        oj["exact_optimum"] = d;
        oj["exact_objectives"] = oracle->exact_objectives;
      }
    }
    oj["mismatches"] = oracle->mismatches;
    j["oracle"] = oj;
  }
  return j.dump(2) + "\n";
}

std::string lowering_json(const Problem& problem, const LoweringReport& report) {
  ordered j;
  j["problem"] = problem.name;
  j["lowerable"] = true;
  j["all_exact"] = report.all_exact();
  j["entries"] = lowering_entries(report);
  return j.dump(2) + "\n";
}

std::string lp_solution_json(const BlpInstance& inst, const BlpSolution& sol, bool include_wall_time) {
  ordered j;
  j["status"] = to_string(sol.status);
  if (sol.has_incumbent) {
    ordered design = ordered::object();
    for (std::size_t b = 0; b < inst.blocks.size(); ++b) {
      int c = sol.choices[b];
      design[inst.blocks[b].module_id] =
          c == DesignVector::kNone ? ordered(nullptr) : ordered(inst.blocks[b].component_names[c]);
    }
    j["design"] = design;
    ordered objectives = ordered::array();
    for (std::size_t k = 0; k < inst.objectives.size(); ++k) {
      objectives.push_back({{"label", inst.objectives[k].label}, {"value", sol.objective_values[k]}});
    }
    j["objectives"] = objectives;
  } else {
    j["design"] = nullptr;
  }
  j["node_count"] = sol.node_count;
  if (include_wall_time) j["wall_time"] = sol.wall_time;
  return j.dump(2) + "\n";
}

DesignVector design_at(const DesignSpace& space, std::uint64_t index) {
  std::vector<int> choices(space.num_modules());
  for (std::size_t i = space.num_modules(); i-- > 0;) {
    const auto& m = space.module(i);
    std::uint64_t radix = m.num_components() + (m.optional() ? 1 : 0);
    int digit = static_cast<int>(index % radix);
    index /= radix;
    choices[i] = m.optional() ? digit - 1 : digit;
  }
  return DesignVector(std::move(choices));
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string csv_number(std::optional<double> v) {
  if (!v) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

SweepSummary write_sweep_csv(const DesignSpec& spec, const SweepOptions& options, std::ostream& out) {
  const auto& space = spec.space;
  std::uint64_t count = space.design_count();
  std::vector<std::uint64_t> ids;
  if (options.sample && *options.sample < count) {
    // Floyd's sampling, then ascending order.
    std::mt19937_64 rng(options.seed);
    std::set<std::uint64_t> picked;
    for (std::uint64_t j = count - *options.sample; j < count; ++j) {
      std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
      if (!picked.insert(t).second) picked.insert(j);
    }
    ids.assign(picked.begin(), picked.end());
  } else {
    if (count > options.cap) {
      throw CapacityError("design space has " + std::to_string(count) +
                          " designs, above the enumeration cap " + std::to_string(options.cap) +
                          "; use --sample N");
    }
  }

  out << "design_id";
  for (const auto& m : space.modules()) out << "," << csv_field(m.module_id());
  for (const auto& o : spec.objectives) out << "," << csv_field(o.label);
  out << ",cost,feasible\n";

  SweepSummary summary;
  auto row = [&](std::uint64_t id, const DesignVector& x) {
    out << id;
    for (std::size_t i = 0; i < space.num_modules(); ++i) {
      out << "," << (x.selected(i) ? csv_field(space.module(i).component_names()[x.choice(i)]) : "");
    }
    for (const auto& o : spec.objectives) out << "," << csv_number(try_eval(o.expr, space, x));
    out << "," << csv_number(spec.cost ? try_eval(*spec.cost, space, x) : std::nullopt);
    bool feasible = false;
    try {
      feasible = is_feasible(spec, x);
    } catch (const DomainError&) {
    }
    out << "," << (feasible ? 1 : 0) << "\n";
    ++summary.rows;
    if (feasible) ++summary.feasible;
  };
  if (!ids.empty() || (options.sample && *options.sample < count)) {
    for (std::uint64_t id : ids) row(id, design_at(space, id));
  } else {
    std::uint64_t id = 0;
    for (const auto& x : enumerate_designs(space, options.cap)) row(id++, x);
  }
  return summary;
}

}  // namespace codesign

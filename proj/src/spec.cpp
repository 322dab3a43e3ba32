#include "codesign/spec.hpp"

#include <algorithm>
#include <cmath>

#include "codesign/error.hpp"

namespace codesign {

const char* to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::kSpeedLowerBound:
      return "speed-lower-bound";
    case SurrogateKind::kIc4UpperBound:
      return "ic4-upper-bound";
    case SurrogateKind::kFlightTimeUpperBound:
      return "flighttime-upper-bound";
  }
  return "?";
}

const char* to_string(Sense sense) { return sense == Sense::kEqual ? "==" : "<="; }

const char* to_string(ConstraintClass klass) {
  return klass == ConstraintClass::kImplicit ? "implicit" : "system";
}

void DesignSpec::validate() const {
  if (objectives.empty()) throw SchemaError("a design spec needs at least one objective");
  auto check_module = [&](std::size_t m, const std::string& label) {
    if (m >= space.num_modules()) {
      throw SchemaError(label + ": module index out of range");
    }
  };
  auto check_subset = [&](std::size_t m, const std::vector<std::size_t>& subset,
                          const std::string& label) {
    for (std::size_t j : subset) {
      if (j >= space.module(m).num_components()) {
        throw SchemaError(label + ": component index out of range");
      }
    }
  };
  for (const auto& r : compat_rules) {
    check_module(r.module_a, r.label);
    check_module(r.module_b, r.label);
    if (r.module_a == r.module_b) {
      throw SchemaError(r.label + ": compatibility rule must relate two modules");
    }
    check_subset(r.module_a, {r.component}, r.label);
    check_subset(r.module_b, r.subset, r.label);
  }
  for (const auto& r : restrictions) {
    check_module(r.module, r.label);
    if (r.subset.empty()) throw SchemaError(r.label + ": restriction subset is empty");
    check_subset(r.module, r.subset, r.label);
  }
  auto check_expr = [&](const Expr& e, const std::string& label) {
    for (std::size_t m : e.modules()) check_module(m, label);
  };
  for (const auto& o : objectives) check_expr(o.expr, o.label);
  for (const auto& c : constraints) check_expr(c.lhs, c.label);
}

namespace {

bool in_subset(const std::vector<std::size_t>& subset, int choice) {
  return choice != DesignVector::kNone &&
         std::binary_search(subset.begin(), subset.end(), static_cast<std::size_t>(choice));
}

ConstraintStatus constraint_status(const DesignSpec& spec, const Constraint& c,
                                   const DesignVector& x) {
  ConstraintStatus st;
  st.label = c.label;
  try {
    st.value = evaluate(c.lhs, spec.space, x);
  } catch (const DomainError& e) {
    throw DomainError("constraint '" + c.label + "': " + e.what());
  }
  if (c.sense == Sense::kEqual) {
    st.slack = -std::abs(st.value - c.rhs);
  } else {
    st.slack = c.rhs - st.value;
  }
  st.satisfied = st.slack >= -kTolerance;
  return st;
}

// Compat rule in indicator form: [x_a]_j <= S (compatible) or <= 1 - S.
ConstraintStatus compat_status(const CompatRule& r, const DesignVector& x) {
  ConstraintStatus st;
  st.label = r.label;
  double chosen = x.choice(r.module_a) == static_cast<int>(r.component) ? 1.0 : 0.0;
  double in_s = in_subset(r.subset, x.choice(r.module_b)) ? 1.0 : 0.0;
  double rhs = r.polarity == Polarity::kCompatible ? in_s : 1.0 - in_s;
  st.value = chosen;
  st.slack = rhs - chosen;
  st.satisfied = st.slack >= 0.0;
  return st;
}

ConstraintStatus restriction_status(const Restriction& r, const DesignVector& x) {
  ConstraintStatus st;
  st.label = r.label;
  st.value = in_subset(r.subset, x.choice(r.module)) ? 1.0 : 0.0;
  st.slack = -std::abs(st.value - 1.0);
  st.satisfied = st.value == 1.0;
  return st;
}

}  // namespace

FeasibilityReport check_feasible(const DesignSpec& spec, const DesignVector& x) {
  validate_design(spec.space, x);
  FeasibilityReport report;
  for (const auto& c : spec.constraints) report.entries.push_back(constraint_status(spec, c, x));
  for (const auto& r : spec.compat_rules) report.entries.push_back(compat_status(r, x));
  for (const auto& r : spec.restrictions) report.entries.push_back(restriction_status(r, x));
  report.feasible = std::all_of(report.entries.begin(), report.entries.end(),
                                [](const ConstraintStatus& s) { return s.satisfied; });
  return report;
}

bool is_feasible(const DesignSpec& spec, const DesignVector& x) {
  for (const auto& r : spec.restrictions) {
    if (!restriction_status(r, x).satisfied) return false;
  }
  for (const auto& r : spec.compat_rules) {
    if (!compat_status(r, x).satisfied) return false;
  }
  for (const auto& c : spec.constraints) {
    if (!constraint_status(spec, c, x).satisfied) return false;
  }
  return true;
}

std::vector<double> evaluate_objectives(const DesignSpec& spec, const DesignVector& x) {
  std::vector<double> out;
  out.reserve(spec.objectives.size());
  for (const auto& o : spec.objectives) {
    try {
      out.push_back(evaluate(o.expr, spec.space, x));
    } catch (const DomainError& e) {
      throw DomainError("objective '" + o.label + "': " + e.what());
    }
  }
  return out;
}

int lex_compare(std::span<const double> a, std::span<const double> b, double tol) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (a[k] > b[k] + tol) return 1;
    if (b[k] > a[k] + tol) return -1;
  }
  return 0;
}

std::optional<std::size_t> lexicographic_argmax(
    const std::vector<std::vector<double>>& values, double tol) {
  if (values.empty()) return std::nullopt;
  std::vector<std::size_t> alive(values.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  std::size_t levels = values.front().size();
  for (std::size_t k = 0; k < levels && alive.size() > 1; ++k) {
    double best = -HUGE_VAL;
    for (std::size_t i : alive) best = std::max(best, values[i][k]);
    std::erase_if(alive, [&](std::size_t i) { return values[i][k] < best - tol; });
  }
  return alive.front();
}

OracleResult brute_force_optimum(const DesignSpec& spec, std::uint64_t cap) {
  OracleResult result;
  std::vector<DesignVector> feasible;
  std::vector<std::vector<double>> values;
  for (const auto& x : enumerate_designs(spec.space, cap)) {
    ++result.designs_evaluated;
    if (!is_feasible(spec, x)) continue;
    feasible.push_back(x);
    values.push_back(evaluate_objectives(spec, x));
  }
  result.feasible_count = feasible.size();
  if (auto best = lexicographic_argmax(values)) {
    result.feasible = true;
    result.design = feasible[*best];
    result.objective_values = values[*best];
  }
  return result;
}

}  // namespace codesign

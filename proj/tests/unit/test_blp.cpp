#include <doctest.h>

#include <random>

#include "codesign/blp.hpp"
#include "codesign/error.hpp"
#include "codesign/lower.hpp"
#include "test_util.hpp"

using namespace codesign;
using testutil::matrix;

namespace {

BlpInstance two_blocks(std::vector<double> a, std::vector<double> b) {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("a", {"f"}, {a}), matrix("b", {"f"}, {b})});
  spec.objectives.push_back({"obj", Expr::feature(0, 0) + Expr::feature(1, 0), std::nullopt});
  return lower(spec).instance;
}

// Random small spec: linear / product objectives, budget rows, a compat rule.
DesignSpec random_spec(std::mt19937& rng) {
  auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
  std::size_t nm = 2 + pick(3);
  std::vector<FeatureMatrix> mods;
  for (std::size_t i = 0; i < nm; ++i) {
    std::size_t n = 1 + pick(4);
    std::vector<std::vector<double>> rows(3, std::vector<double>(n));
    for (auto& v : rows[0]) v = std::round(u(-5, 10));
    for (auto& v : rows[1]) v = std::round(u(0, 10));
    for (auto& v : rows[2]) v = u(0.5, 3);
    mods.push_back(matrix("m" + std::to_string(i), {"gain", "cost", "pos"}, rows, i >= 2 && pick(4) == 0));
  }
  DesignSpec spec;
  spec.space = DesignSpace(mods);
  std::vector<Expr> gains, costs;
  for (std::size_t i = 0; i < nm; ++i) {
    gains.push_back(Expr::feature(i, 0));
    costs.push_back(Expr::feature(i, 1));
  }
  if (pick(3) == 0) {
    spec.objectives.push_back({"prod", Expr::feature(0, 2) * Expr::feature(1, 2) + Expr::sum(gains), std::nullopt});
  } else {
    spec.objectives.push_back({"gain", Expr::sum(gains), std::nullopt});
  }
  if (pick(2) == 0) spec.objectives.push_back({"cheap", -Expr::sum(costs), std::nullopt});
  spec.constraints.push_back({"budget", Expr::sum(costs), Sense::kLessEqual, std::round(u(0, 8 * nm))});
  if (pick(3) == 0) {
    spec.constraints.push_back({"floor", -Expr::feature(0, 0), Sense::kLessEqual, std::round(u(-6, 2))});
  }
  if (pick(2) == 0) {
    CompatRule r;
    r.label = "rule";
    r.module_a = 0;
    r.component = 0;
    r.module_b = 1;
    r.subset = {0};
    r.polarity = pick(2) ? Polarity::kCompatible : Polarity::kIncompatible;
    spec.compat_rules.push_back(r);
  }
  spec.validate();
  return spec;
}

}  // namespace

TEST_CASE("root bound examples") {
  auto inst = two_blocks({1, 5}, {2, 3});
  CHECK(root_bound(inst, 0) == 8.0);
  CHECK(root_bound(inst, 0, {0, kUnfixed}) == 4.0);
  CHECK(root_bound(two_blocks({0, 0}, {0, 0}), 0) == 0.0);
}

TEST_CASE("solve toy with budget row matches enumeration") {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("motor", {"thrust", "cost"}, {{3, 5, 9}, {10, 20, 40}}),
                            matrix("frame", {"lift", "cost"}, {{1, 2}, {5, 15}})});
  spec.objectives.push_back({"perf", Expr::feature(0, 0) + Expr::feature(1, 0), std::nullopt});
  spec.constraints.push_back({"budget", Expr::feature(0, 1) + Expr::feature(1, 1), Sense::kLessEqual, 35});
  auto inst = lower(spec).instance;
  auto sol = solve(inst);
  auto ref = exhaustive_optimum(inst);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(sol.choices == ref.choices);
  CHECK(sol.choices == std::vector<int>{1, 1});
  CHECK(sol.objective_values[0] == 7.0);
  for (double s : sol.row_slack) CHECK(s >= -1e-9);
}

TEST_CASE("zero objective returns the lowest-index feasible design") {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("a", {"f"}, {{4, 1, 2}}), matrix("b", {"f"}, {{3, 0}})});
  spec.objectives.push_back({"zero", Expr::constant(0.0), std::nullopt});
  spec.constraints.push_back({"cap", Expr::feature(0, 0), Sense::kLessEqual, 2});
  auto sol = solve(lower(spec).instance);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(sol.choices == std::vector<int>{1, 0});
}

TEST_CASE("contradictory rows are infeasible") {
  auto inst = two_blocks({1, 2}, {1, 2});
  BlpRow zero{"zero", {}, Sense::kEqual, 0.0, RowKind::kConstraint, "zero", "test"};
  for (std::size_t v = 0; v < 2; ++v) zero.terms.push_back({v, 1.0});
  inst.rows.push_back(zero);
  auto sol = solve(inst);
  CHECK(sol.status == SolveStatus::kInfeasible);
  CHECK_FALSE(sol.has_incumbent);
}

TEST_CASE("propagation examples") {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("motor", {"cost"}, {{10, 50, 20}}), matrix("frame", {"cost"}, {{1, 2}})});
  spec.objectives.push_back({"o", Expr::constant(0.0), std::nullopt});
  spec.constraints.push_back({"budget", Expr::feature(0, 0) + Expr::feature(1, 0), Sense::kLessEqual, 30});
  auto inst = lower(spec).instance;
  auto d = propagate(inst, Domains::full(inst));
  REQUIRE(d);
  CHECK(d->alive[0] == std::vector<char>{1, 0, 1});
  CHECK(d->count(1) == 2);

  // no rows besides one-hot
  DesignSpec free = spec;
  free.constraints.clear();
  auto inst2 = lower(free).instance;
  auto d2 = propagate(inst2, Domains::full(inst2));
  REQUIRE(d2);
  CHECK(d2->count(0) == 3);

  // incompatibility: a[0] fixed removes {0,2} from b
  DesignSpec inc;
  inc.space = DesignSpace({matrix("a", {"f"}, {{1, 2}}), matrix("b", {"f"}, {{1, 2, 3}})});
  inc.objectives.push_back({"o", Expr::constant(0.0), std::nullopt});
  inc.compat_rules.push_back({"r", 0, 0, 1, {0, 2}, Polarity::kIncompatible});
  auto inst3 = lower(inc).instance;
  Domains fixed = Domains::full(inst3);
  fixed.alive[0] = {1, 0};
  auto d3 = propagate(inst3, fixed);
  REQUIRE(d3);
  CHECK(d3->alive[1] == std::vector<char>{0, 1, 0});

  // conflict
  DesignSpec bad = spec;
  bad.constraints[0].rhs = 5;
  auto inst4 = lower(bad).instance;
  CHECK_FALSE(propagate(inst4, Domains::full(inst4)));
}

TEST_CASE("limits return the status, never silently") {
  std::mt19937 rng(11);
  std::vector<FeatureMatrix> mods;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> g(8), c(8);
    for (int j = 0; j < 8; ++j) {
      g[j] = static_cast<double>(rng() % 100);
      c[j] = static_cast<double>(rng() % 100);
    }
    mods.push_back(matrix("m" + std::to_string(i), {"g", "c"}, {g, c}));
  }
  DesignSpec spec;
  spec.space = DesignSpace(mods);
  std::vector<Expr> g, c;
  for (std::size_t i = 0; i < 6; ++i) {
    g.push_back(Expr::feature(i, 0));
    c.push_back(Expr::feature(i, 1));
  }
  spec.objectives.push_back({"g", Expr::sum(g), std::nullopt});
  spec.constraints.push_back({"c", Expr::sum(c), Sense::kLessEqual, 200});
  auto inst = lower(spec).instance;
  SolverConfig cfg;
  cfg.node_limit = 1;
  auto sol = solve(inst, cfg);
  CHECK(sol.status == SolveStatus::kLimitReached);
  CHECK(sol.node_count <= 2);
  auto full = solve(inst);
  CHECK(full.status == SolveStatus::kOptimal);
  CHECK(full.objective_values == exhaustive_optimum(inst).objective_values);
}

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.time_limit = -1;
  CHECK_THROWS_AS(cfg.validate(), SchemaError);
  cfg = SolverConfig{};
  cfg.node_limit = 0;
  CHECK_THROWS_AS(cfg.validate(), SchemaError);
  cfg = SolverConfig{};
  cfg.absolute_gap_tolerance = -1e-3;
  CHECK_THROWS_AS(cfg.validate(), SchemaError);
}

TEST_CASE("random instances against enumeration") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 300; ++trial) {
    DesignSpec spec = random_spec(rng);
    auto inst = lower(spec).instance;
    auto ref = exhaustive_optimum(inst);
    for (Branching b : {Branching::kMostConstrained, Branching::kIndexOrder}) {
      SolverConfig cfg;
      cfg.branching = b;
      auto sol = solve(inst, cfg);
      REQUIRE(sol.status == ref.status);
      if (sol.status != SolveStatus::kOptimal) continue;
      for (std::size_t k = 0; k < ref.objective_values.size(); ++k) {
        CHECK(testutil::rel_close(sol.objective_values[k], ref.objective_values[k], 1e-9));
      }
      CHECK(sol.choices == ref.choices);
      for (double s : sol.row_slack) CHECK(s >= -1e-9);
    }
    // admissible bound
    if (ref.status == SolveStatus::kOptimal) {
      CHECK(root_bound(inst, 0) >= ref.objective_values[0] - 1e-9);
    }
    // propagation keeps every feasible design
    auto d = propagate(inst, Domains::full(inst));
    for (const auto& x : enumerate_designs(spec.space)) {
      auto vals = inst.assignment(x.choices());
      bool ok = true;
      for (const auto& row : inst.rows) ok = ok && inst.satisfied(row, vals);
      if (!ok) continue;
      REQUIRE(d);
      for (std::size_t b = 0; b < inst.blocks.size(); ++b) {
        int c = x.choices()[b];
        if (c == DesignVector::kNone) {
          CHECK(d->none_alive[b]);
        } else {
          CHECK(d->alive[b][static_cast<std::size_t>(c)]);
        }
      }
    }
  }
}

TEST_CASE("deterministic runs are identical") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = lower(random_spec(rng)).instance;
    auto a = solve(inst);
    auto b = solve(inst);
    CHECK(a.status == b.status);
    CHECK(a.values == b.values);
    CHECK(a.node_count == b.node_count);
  }
}

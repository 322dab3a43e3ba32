#include <doctest.h>

#include <cmath>

#include "codesign/error.hpp"
#include "codesign/parser.hpp"
#include "codesign/spec.hpp"
#include "test_util.hpp"

using namespace codesign;
using testutil::matrix;

namespace {

DesignSpace motor_space() {
  return DesignSpace({matrix("motor", {"torque", "cost"}, {{0.1, 0.2, 0.3}, {10, 20, 30}})});
}

}  // namespace

TEST_CASE("scaled feature term selects a column") {
  auto space = motor_space();
  Expr sp = Expr::feature(space, "motor", "torque", 4.0);
  CHECK(evaluate(sp, space, DesignVector({1})) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(evaluate(Expr::constant(3.5), space, DesignVector({2})) == 3.5);
}

TEST_CASE("quotient of products") {
  DesignSpace space({matrix("a", {"v"}, {{6.0}}), matrix("b", {"v"}, {{3.0}})});
  Expr q = Expr::quotient(Expr::product({Expr::feature(0, 0)}), Expr::product({Expr::feature(1, 0)}));
  CHECK(evaluate(q, space, DesignVector({0, 0})) == 2.0);
}

TEST_CASE("domain errors") {
  DesignSpace space({matrix("a", {"v"}, {{-1.0, 0.0, 4.0}})});
  Expr lg = Expr::log(Expr::feature(0, 0));
  CHECK_THROWS_AS(evaluate(lg, space, DesignVector({0})), DomainError);
  CHECK_THROWS_AS(evaluate(lg, space, DesignVector({1})), DomainError);
  CHECK(evaluate(lg, space, DesignVector({2})) == doctest::Approx(std::log(4.0)));
  Expr root = Expr::power(Expr::feature(0, 0), 1, 2);
  CHECK_THROWS_AS(evaluate(root, space, DesignVector({0})), DomainError);
  CHECK(evaluate(root, space, DesignVector({2})) == 2.0);
  // integer powers are fine on negatives
  CHECK(evaluate(Expr::power(Expr::feature(0, 0), 3), space, DesignVector({0})) == -1.0);
  Expr div = Expr::constant(1.0) / Expr::feature(0, 0);
  CHECK_THROWS_AS(evaluate(div, space, DesignVector({1})), DomainError);
  CHECK_THROWS_AS(evaluate(Expr::feature(0, 0), space, DesignVector({DesignVector::kNone})), DomainError);
}

TEST_CASE("unselected optional module contributes zero") {
  DesignSpace space({matrix("a", {"v"}, {{1.0, 2.0}}), matrix("s", {"w"}, {{5.0, 7.0}}, true)});
  Expr e = Expr::feature(0, 0) + Expr::feature(1, 0) + Expr::selector(1, {0, 1}, 10.0);
  CHECK(evaluate(e, space, DesignVector({1, DesignVector::kNone})) == 2.0);
  CHECK(evaluate(e, space, DesignVector({1, 1})) == 19.0);
}

TEST_CASE("selector term") {
  auto space = motor_space();
  Expr s = Expr::selector(space, "motor", {"c0", "c2"});
  CHECK(evaluate(s, space, DesignVector({0})) == 1.0);
  CHECK(evaluate(s, space, DesignVector({1})) == 0.0);
  CHECK_THROWS_AS(Expr::selector(space, "motor", {"zz"}), LookupError);
}

TEST_CASE("budget with zero slack") {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("m", {"cost"}, {{300, 400}}), matrix("f", {"cost"}, {{200, 100}})});
  spec.objectives.push_back({"o", Expr::constant(0.0), std::nullopt});
  spec.constraints.push_back(
      Constraint{"budget", Expr::feature(0, 0) + Expr::feature(1, 0), Sense::kLessEqual, 500.0,
                 ConstraintClass::kSystem, std::nullopt});
  auto rep = check_feasible(spec, DesignVector({0, 0}));
  CHECK(rep.feasible);
  REQUIRE(rep.entries.size() == 1);
  CHECK(rep.entries[0].slack == 0.0);
  CHECK(rep.entries[0].satisfied);
  CHECK_FALSE(check_feasible(spec, DesignVector({1, 0})).feasible);
  spec.constraints.clear();
  for (const auto& x : enumerate_designs(spec.space)) CHECK(is_feasible(spec, x));
}

TEST_CASE("compatibility truth table") {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("a", {"f"}, {{1, 2}}), matrix("b", {"f"}, {{1, 2}})});
  spec.objectives.push_back({"o", Expr::constant(0.0), std::nullopt});
  spec.compat_rules.push_back({"no_a0_b1", 0, 0, 1, {1}, Polarity::kIncompatible});
  // [x_a]_0 <= 1 - [x_b]_1
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      bool expected = !(a == 0 && b == 1);
      CHECK(is_feasible(spec, DesignVector({a, b})) == expected);
    }
  }
  spec.compat_rules[0].polarity = Polarity::kCompatible;
  // [x_a]_0 <= [x_b]_1
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      bool expected = !(a == 0 && b == 0);
      CHECK(is_feasible(spec, DesignVector({a, b})) == expected);
    }
  }
}

TEST_CASE("constraint domain errors carry the label") {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("a", {"f"}, {{-1.0}})});
  spec.objectives.push_back({"o", Expr::constant(0.0), std::nullopt});
  spec.constraints.push_back({"logc", Expr::log(Expr::feature(0, 0)), Sense::kLessEqual, 0.0,
                              ConstraintClass::kSystem, std::nullopt});
  try {
    check_feasible(spec, DesignVector({0}));
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("logc") != std::string::npos);
  }
}

TEST_CASE("brute force: unconstrained argmax") {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("m", {"torque"}, {{1, 3, 2}}), matrix("g", {"ratio"}, {{4, 9}})});
  spec.objectives.push_back({"t", Expr::feature(0, 0) + Expr::feature(1, 0), std::nullopt});
  auto r = brute_force_optimum(spec);
  CHECK(r.feasible);
  CHECK(r.design.choices() == std::vector<int>{1, 1});
  CHECK(r.designs_evaluated == 6);
}

TEST_CASE("brute force: budget excludes the best motor") {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("motor", {"thrust", "cost"}, {{5, 9, 7}, {100, 400, 200}}),
                            matrix("frame", {"len", "cost"}, {{0.2, 0.25}, {50, 40}})});
  spec.objectives.push_back({"speed", Expr::quotient(Expr::feature(0, 0), Expr::feature(1, 0)), std::nullopt});
  spec.constraints.push_back(Constraint{"budget", Expr::feature(0, 1) + Expr::feature(1, 1),
                                        Sense::kLessEqual, 300.0, ConstraintClass::kSystem, std::nullopt});
  auto r = brute_force_optimum(spec);
  CHECK(r.design.choices() == std::vector<int>{2, 0});
  CHECK(r.feasible_count == 4);
}

TEST_CASE("brute force: lexicographic tie resolved by the second level") {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("m", {"cost", "size"}, {{10, 10, 12}, {3, 2, 1}})});
  spec.objectives.push_back({"cheap", -Expr::feature(0, 0), std::nullopt});
  spec.objectives.push_back({"small", -Expr::feature(0, 1), std::nullopt});
  auto r = brute_force_optimum(spec);
  CHECK(r.design.choices() == std::vector<int>{1});
  CHECK(r.objective_values == std::vector<double>{-10, -2});
}

TEST_CASE("brute force: infeasible spec") {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("m", {"f"}, {{1, 2}})});
  spec.objectives.push_back({"o", Expr::feature(0, 0), std::nullopt});
  spec.constraints.push_back({"c", Expr::feature(0, 0), Sense::kLessEqual, 0.5, ConstraintClass::kSystem, std::nullopt});
  CHECK_FALSE(brute_force_optimum(spec).feasible);
}

TEST_CASE("lex comparison and tie-break") {
  std::vector<double> a{1.0, 2.0}, b{1.0 + 1e-12, 1.0};
  CHECK(lex_compare(a, b) > 0);
  CHECK(lex_compare(b, a) < 0);
  CHECK(lex_compare(a, a) == 0);
  CHECK(lexicographic_argmax({{1, 5}, {2, 0}, {2, 0}}) == 1u);
  CHECK(lexicographic_argmax({{2, 1}, {2, 3}, {2, 3}}) == 1u);
  CHECK_FALSE(lexicographic_argmax({}).has_value());
}

TEST_CASE("brute-force optimum is never beaten") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> val(0.5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    DesignSpec spec;
    spec.space = DesignSpace({matrix("a", {"f", "g"}, {{val(rng), val(rng), val(rng)}, {val(rng), val(rng), val(rng)}}),
                              matrix("b", {"f", "g"}, {{val(rng), val(rng)}, {val(rng), val(rng)}})});
    spec.objectives.push_back({"o", Expr::feature(0, 0) * Expr::feature(1, 0), std::nullopt});
    spec.constraints.push_back({"c", Expr::feature(0, 1) + Expr::feature(1, 1), Sense::kLessEqual, 6.0,
                                ConstraintClass::kSystem, std::nullopt});
    auto r = brute_force_optimum(spec);
    if (!r.feasible) continue;
    CHECK(is_feasible(spec, r.design));
    for (const auto& x : enumerate_designs(spec.space)) {
      if (is_feasible(spec, x)) CHECK(lex_compare(evaluate_objectives(spec, x), r.objective_values) <= 0);
    }
  }
}

TEST_CASE("parser") {
  DesignSpace space({matrix("motor", {"thrust", "cost"}, {{4, 9}, {10, 20}}),
                     matrix("frame", {"length"}, {{0.2, 0.25}})});
  ParamMap params{{"k", 2.0}};
  Expr e = parse_expr("k * feat(motor, thrust)^2 / feat(frame, length) - 1", space, params);
  CHECK(evaluate(e, space, DesignVector({1, 0})) == doctest::Approx(2.0 * 81 / 0.2 - 1));
  Expr s = parse_expr("sel(motor, {c1}) + sqrt(feat(motor, thrust)) + log(feat(frame, length))", space);
  CHECK(evaluate(s, space, DesignVector({1, 1})) == doctest::Approx(1 + 3 + std::log(0.25)));
  Expr m = parse_expr("feat(motor, cost, 4)", space);
  CHECK(evaluate(m, space, DesignVector({0, 0})) == 40.0);

  Constraint c = parse_constraint("budget: feat(motor, cost) >= 15", space);
  CHECK(c.label == "budget");
  CHECK(c.sense == Sense::kLessEqual);
  CHECK(c.rhs == -15.0);
  CHECK(evaluate(c.lhs, space, DesignVector({0, 0})) == -10.0);
  Constraint eq = parse_constraint("feat(motor, cost) == 20", space, {}, ConstraintClass::kSystem, "dflt");
  CHECK(eq.sense == Sense::kEqual);
  CHECK(eq.label == "dflt");

  Objective o = parse_objective("speed: feat(motor, thrust) / feat(frame, length)", space);
  CHECK(o.label == "speed");

  CHECK_THROWS_AS(parse_expr("feat(motor, nope)", space), ParseError);
  CHECK_THROWS_AS(parse_expr("feat(nope, thrust)", space), ParseError);
  CHECK_THROWS_AS(parse_expr("feat(motor, thrust) +", space), ParseError);
  CHECK_THROWS_AS(parse_expr("unknown_param * 2", space), ParseError);
  CHECK_THROWS_AS(parse_expr("feat(motor, thrust) ^ feat(motor, cost)", space), ParseError);
}

TEST_CASE("to_string reparses to the same values") {
  DesignSpace space({matrix("motor", {"thrust", "cost"}, {{4, 9}, {10, 20}}),
                     matrix("frame", {"length"}, {{0.2, 0.25}})});
  Expr e = parse_expr("3 * feat(motor, thrust)^(1/2) / feat(frame, length) + log(feat(motor, cost)) - 2", space);
  Expr back = parse_expr(to_string(e, space), space);
  for (const auto& x : enumerate_designs(space)) {
    CHECK(evaluate(back, space, x) == doctest::Approx(evaluate(e, space, x)).epsilon(1e-14));
  }
}

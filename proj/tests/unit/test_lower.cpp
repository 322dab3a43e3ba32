#include <doctest.h>

#include <cmath>
#include <set>

#include "codesign/blp.hpp"
#include "codesign/error.hpp"
#include "codesign/lower.hpp"
#include "codesign/parser.hpp"
#include "test_util.hpp"

using namespace codesign;
using testutil::matrix;

namespace {

double dot(const LinearForm& f, const DesignSpace& space, const DesignVector& x) {
  auto s = x.stacked(space);
  double v = f.offset;
  for (std::size_t k = 0; k < s.size(); ++k) v += f.coefs[k] * s[k];
  return v;
}

DesignSpec with_objective(DesignSpace space, Expr e) {
  DesignSpec spec;
  spec.space = std::move(space);
  spec.objectives.push_back({"obj", std::move(e), std::nullopt});
  return spec;
}

}  // namespace

TEST_CASE("linear passthrough") {
  DesignSpace space({matrix("motor", {"torque", "cost"}, {{1, 2, 3}, {10, 20, 30}}),
                     matrix("frame", {"cost"}, {{5, 7}})});
  auto f = lower_linear(Expr::feature(0, 0, 4.0), space);
  REQUIRE(f);
  CHECK(f->coefs == std::vector<double>{4, 8, 12, 0, 0});
  CHECK(f->offset == 0.0);

  auto c = lower_linear(Expr::constant(5.0), space);
  REQUIRE(c);
  CHECK(c->coefs == std::vector<double>(5, 0.0));
  CHECK(c->offset == 5.0);

  auto b = lower_linear(Expr::feature(0, 1) + Expr::feature(1, 0) - Expr::constant(100.0), space);
  REQUIRE(b);
  CHECK(b->coefs == std::vector<double>{10, 20, 30, 5, 7});
  CHECK(b->offset == -100.0);

  CHECK_FALSE(lower_linear(Expr::feature(0, 0) * Expr::feature(1, 0), space));
  auto sel = lower_linear(Expr::selector(0, {0, 2}, 2.0), space);
  REQUIRE(sel);
  CHECK(sel->coefs == std::vector<double>{2, 0, 2, 0, 0});
}

TEST_CASE("columnwise products and functions") {
  DesignSpace space({matrix("motor", {"current", "voltage", "torque"}, {{2, 3}, {12, 24}, {1, 2}}),
                     matrix("cam", {"current", "voltage"}, {{0.5, 1.0}, {5, 5}})});
  Expr power = Expr::feature(0, 0, 4.0) * Expr::feature(0, 1) + Expr::feature(1, 0) * Expr::feature(1, 1);
  auto f = lower_columnwise(power, space);
  REQUIRE(f);
  CHECK(f->coefs == std::vector<double>{96, 288, 2.5, 5});

  auto id = lower_columnwise(Expr::unary(0, "identity", [](const ColumnView& c) { return c.at(2); }), space);
  REQUIRE(id);
  CHECK(id->coefs == std::vector<double>{1, 2, 0, 0});

  DesignSpace sq({matrix("m", {"torque"}, {{1, 2, 3}})});
  Expr square = Expr::power(Expr::feature(0, 0), 2);
  auto s = lower_columnwise(square, sq);
  REQUIRE(s);
  CHECK(s->coefs == std::vector<double>{1, 4, 9});
  for (const auto& x : enumerate_designs(sq)) CHECK(dot(*s, sq, x) == evaluate(square, sq, x));

  // two modules in one term
  CHECK_FALSE(lower_columnwise(Expr::feature(0, 0) * Expr::feature(1, 0), space));
}

TEST_CASE("columnwise refuses undefined columns") {
  DesignSpace space({matrix("motor", {"v"}, {{1.0, -2.0}})});
  try {
    lower_columnwise(Expr::log(Expr::feature(0, 0)), space);
    FAIL("expected LoweringError");
  } catch (const LoweringError& e) {
    std::string msg = e.what();
    CHECK(msg.find("motor") != std::string::npos);
    CHECK(msg.find("c1") != std::string::npos);
  }
}

TEST_CASE("columnwise on optional modules shifts by the empty value") {
  DesignSpace space({matrix("a", {"v"}, {{1, 2}}), matrix("s", {"v"}, {{3, 4}}, true)});
  Expr e = Expr::power(Expr::feature(1, 0) + Expr::constant(1.0), 2);
  auto f = lower_columnwise(e, space);
  REQUIRE(f);
  for (const auto& x : enumerate_designs(space)) CHECK(dot(*f, space, x) == evaluate(e, space, x));
}

TEST_CASE("log-rational coefficients") {
  const double e1 = std::exp(1.0), e2 = std::exp(2.0);
  DesignSpace space({matrix("a", {"v"}, {{1, e1}}), matrix("b", {"v"}, {{1, e2}})});
  Expr prod = Expr::feature(0, 0) * Expr::feature(1, 0);
  auto f = lower_log_rational(prod, space);
  REQUIRE(f);
  CHECK(f->scale == 1.0);
  CHECK(f->additive == 0.0);
  CHECK(f->log_form.coefs[0] == 0.0);
  CHECK(f->log_form.coefs[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f->log_form.coefs[2] == 0.0);
  CHECK(f->log_form.coefs[3] == doctest::Approx(2.0).epsilon(1e-15));

  // argmax matches brute force
  auto spec = with_objective(space, prod);
  auto lowered = lower(spec);
  auto sol = solve(lowered.instance);
  CHECK(sol.choices == brute_force_optimum(spec).design.choices());

  DesignSpace ones({matrix("a", {"v"}, {{1, 1}}), matrix("b", {"v"}, {{1, 1, 1}})});
  auto z = lower_log_rational(Expr::feature(0, 0) / Expr::feature(1, 0), ones);
  REQUIRE(z);
  for (double c : z->log_form.coefs) CHECK(c == 0.0);
}

TEST_CASE("log-rational with denominators and powers") {
  DesignSpace space({matrix("m", {"t"}, {{4, 9}}), matrix("f", {"l"}, {{0.2, 0.25}})});
  Expr e = Expr::constant(3.0) * Expr::power(Expr::feature(0, 0), 1, 2) / Expr::feature(1, 0);
  auto f = lower_log_rational(e, space);
  REQUIRE(f);
  // k + c exp(log_form . x) reproduces the value on every design
  for (const auto& x : enumerate_designs(space)) {
    double v = f->additive + f->scale * std::exp(dot(f->log_form, space, x));
    CHECK(v == doctest::Approx(evaluate(e, space, x)).epsilon(1e-14));
  }
  CHECK(f->log_form.coefs[3] - f->log_form.coefs[2] == doctest::Approx(-std::log(0.25) + std::log(0.2)));
  // a sum over two modules is not of this shape
  CHECK_FALSE(lower_log_rational(Expr::feature(0, 0) + Expr::feature(1, 0), space));
}

TEST_CASE("log-rational refuses nonpositive factors") {
  DesignSpace space({matrix("a", {"v"}, {{1, -1}}), matrix("b", {"v"}, {{2, 3}})});
  CHECK_THROWS_AS(lower_log_rational(Expr::feature(0, 0) * Expr::feature(1, 0), space), LoweringError);
}

TEST_CASE("rational constraint becomes an exact log row") {
  DesignSpec spec;
  spec.space = DesignSpace({matrix("b", {"q"}, {{1.0, 1.5, 2.2}}), matrix("m", {"a"}, {{10, 14, 20}})});
  spec.objectives.push_back({"o", Expr::constant(0.0), std::nullopt});
  // q / a >= 0.1  ->  -q/a <= -0.1
  spec.constraints.push_back({"ft", -(Expr::feature(0, 0) / Expr::feature(1, 0)), Sense::kLessEqual, -0.1,
                              ConstraintClass::kSystem, std::nullopt});
  auto r = lower(spec);
  REQUIRE(r.report.entries.size() == 2);
  CHECK(r.report.entries[1].transformation == Transformation::kLogRational);
  for (const auto& x : enumerate_designs(spec.space)) {
    auto v = r.instance.assignment(x.choices());
    bool lowered_ok = true;
    for (const auto& row : r.instance.rows) lowered_ok = lowered_ok && r.instance.satisfied(row, v);
    CHECK(lowered_ok == is_feasible(spec, x));
  }
}

TEST_CASE("joint-choice lifting") {
  DesignSpace space({matrix("a", {"v"}, {{1, 2}}), matrix("b", {"v"}, {{3, 4}})});
  Expr cross = Expr::cross({0, 1}, "ab", [](std::span<const ColumnView> c) { return c[0].at(0) * c[1].at(0); });
  auto lf = lift_cross_terms(cross, space);
  REQUIRE(lf.lifted.size() == 1);
  CHECK(lf.lifted[0].modules == std::vector<std::size_t>{0, 1});
  CHECK(lf.lifted[0].cells == std::vector<double>{3, 4, 6, 8});

  Expr flat = Expr::cross({0, 1}, "const", [](std::span<const ColumnView>) { return 2.5; });
  auto cf = lift_cross_terms(flat, space);
  for (double c : cf.lifted[0].cells) CHECK(c == 2.5);

  auto spec = with_objective(space, cross);
  auto r = lower(spec);
  const auto& inst = r.instance;
  REQUIRE(inst.lifted.size() == 1);
  CHECK(inst.lifted[0].cells == 4);
  // linking rows force the cell at the parents' choices
  for (const auto& x : enumerate_designs(space)) {
    auto v = inst.assignment(x.choices());
    for (const auto& row : inst.rows) CHECK(inst.satisfied(row, v));
    std::size_t cell = lifted_cell(inst, inst.lifted[0], x.choices());
    for (std::size_t c = 0; c < 4; ++c) CHECK(v[inst.lifted[0].offset + c] == (c == cell ? 1 : 0));
    // any other cell breaks a linking row
    for (std::size_t c = 0; c < 4; ++c) {
      if (c == cell) continue;
      auto w = v;
      w[inst.lifted[0].offset + cell] = 0;
      w[inst.lifted[0].offset + c] = 1;
      bool all = true;
      for (const auto& row : inst.rows) all = all && inst.satisfied(row, w);
      CHECK_FALSE(all);
    }
  }
  auto sol = solve(inst);
  CHECK(sol.choices == std::vector<int>{1, 1});
  CHECK(sol.objective_values[0] == 8.0);
}

TEST_CASE("lifting counts and cap") {
  DesignSpace space({matrix("a", {"v"}, {{1, 2, 3}}), matrix("b", {"v"}, {{1, 2, 3, 4}})});
  Expr e = Expr::feature(0, 0) * Expr::feature(1, 0) + Expr::feature(0, 0);
  auto spec = with_objective(space, e);
  auto r = lower(spec);
  REQUIRE(r.instance.lifted.size() == 1);
  CHECK(r.instance.lifted[0].cells == 12);
  std::size_t links = 0;
  std::set<std::size_t> parents;
  for (const auto& row : r.instance.rows) {
    if (row.kind == RowKind::kLinking) ++links;
  }
  CHECK(links == 7);  // one per component of each parent
  CHECK(r.report.entries[0].transformation == Transformation::kLifted);

  CHECK_THROWS_AS(lift_cross_terms(e, space, 11), CapacityError);
  LoweringOptions small;
  small.lifting_cap = 11;
  CHECK_THROWS_AS(lower(spec, small), LoweringError);

  DesignSpace opt({matrix("a", {"v"}, {{1, 2}}), matrix("s", {"v"}, {{1, 2}}, true)});
  CHECK_THROWS_AS(lift_cross_terms(Expr::feature(0, 0) * Expr::feature(1, 0) + Expr::feature(0, 0), opt),
                  LoweringError);
}

TEST_CASE("compatibility rows") {
  DesignSpace space({matrix("frontend", {"v"}, {{1, 2}}), matrix("sensor", {"v"}, {{1, 2, 3}})});
  CompatRule lidar{"lidar_vs_mono", 0, 0, 1, {0}, Polarity::kIncompatible};
  BlpRow inc = lower_compat(lidar, space);
  CHECK(inc.sense == Sense::kLessEqual);
  CHECK(inc.rhs == 1.0);
  REQUIRE(inc.terms.size() == 2);
  CHECK(inc.terms[0].var == 0);
  CHECK(inc.terms[1].var == 2);

  DesignSpec spec = with_objective(space, Expr::constant(0.0));
  spec.compat_rules.push_back(lidar);
  spec.compat_rules.push_back({"needs", 0, 1, 1, {1, 2}, Polarity::kCompatible});
  auto r = lower(spec);
  for (const auto& x : enumerate_designs(space)) {
    auto v = r.instance.assignment(x.choices());
    bool ok = true;
    for (const auto& row : r.instance.rows) ok = ok && r.instance.satisfied(row, v);
    CHECK(ok == is_feasible(spec, x));
  }

  // whole catalog, compatible: never binding
  DesignSpec all = with_objective(space, Expr::constant(0.0));
  all.compat_rules.push_back({"any", 0, 0, 1, {0, 1, 2}, Polarity::kCompatible});
  auto ra = lower(all);
  for (const auto& x : enumerate_designs(space)) {
    auto v = ra.instance.assignment(x.choices());
    for (const auto& row : ra.instance.rows) CHECK(ra.instance.satisfied(row, v));
  }

  // empty compatible subset is emitted and flagged
  DesignSpec empty = with_objective(space, Expr::constant(0.0));
  empty.compat_rules.push_back({"never", 0, 0, 1, {}, Polarity::kCompatible});
  auto re = lower(empty);
  CHECK(re.report.entries.back().note.find("empty compatible subset") != std::string::npos);
  auto sol = solve(re.instance);
  CHECK(sol.choices[0] == 1);
}

TEST_CASE("restrictions") {
  std::vector<double> motors(17);
  for (std::size_t j = 0; j < 17; ++j) motors[j] = static_cast<double>(j);
  DesignSpace space({matrix("motor", {"t"}, {motors})});
  BlpRow row = lower_restriction({"in_house", 0, {3, 8}}, space);
  CHECK(row.sense == Sense::kEqual);
  CHECK(row.rhs == 1.0);
  REQUIRE(row.terms.size() == 2);
  CHECK(row.terms[0].coef == 1.0);

  DesignSpec spec = with_objective(space, Expr::feature(0, 0));
  spec.restrictions.push_back({"in_house", 0, {3, 8}});
  auto sol = solve(lower(spec).instance);
  CHECK(sol.choices[0] == 8);

  spec.restrictions = {{"only", 0, {5}}};
  CHECK(solve(lower(spec).instance).choices[0] == 5);

  // the whole catalog duplicates the one-hot row and is dropped
  std::vector<std::size_t> all(17);
  for (std::size_t j = 0; j < 17; ++j) all[j] = j;
  spec.restrictions = {{"all", 0, all}};
  auto r = lower(spec);
  CHECK(r.instance.rows.size() == 1);
  CHECK(r.report.entries.back().rows.empty());
}

TEST_CASE("empty constraint set, linear objective") {
  DesignSpace space({matrix("a", {"v"}, {{1, 2}}), matrix("b", {"v"}, {{3, 4, 5}})});
  auto r = lower(with_objective(space, Expr::feature(0, 0) + Expr::feature(1, 0)));
  CHECK(r.instance.rows.size() == 2);
  for (const auto& row : r.instance.rows) CHECK(row.kind == RowKind::kOneHot);
  CHECK(r.instance.objectives.size() == 1);
  CHECK(r.instance.lifted.empty());
  CHECK(r.report.all_exact());
}

TEST_CASE("one-hot rows respect optional modules") {
  DesignSpace space({matrix("a", {"v"}, {{1, 2}}), matrix("s", {"v"}, {{3, 4}}, true)});
  auto r = lower(with_objective(space, Expr::feature(0, 0)));
  REQUIRE(r.instance.rows.size() == 2);
  CHECK(r.instance.rows[0].sense == Sense::kEqual);
  CHECK(r.instance.rows[1].sense == Sense::kLessEqual);
  CHECK(r.instance.rows[1].rhs == 1.0);
}

TEST_CASE("unlowerable expressions are listed") {
  DesignSpace space({matrix("a", {"v"}, {{1, 2}}), matrix("b", {"v"}, {{3, 4}})});
  DesignSpec spec = with_objective(space, Expr::feature(0, 0));
  spec.constraints.push_back({"weird", Expr::log(Expr::feature(0, 0) + Expr::feature(1, 0)),
                              Sense::kLessEqual, 1.0, ConstraintClass::kSystem, std::nullopt});
  LoweringOptions o;
  o.lifting_cap = 2;
  try {
    lower(spec, o);
    FAIL("expected LoweringError");
  } catch (const LoweringError& e) {
    CHECK(std::string(e.what()).find("weird") != std::string::npos);
  }
  // with the default cap it lifts
  auto r = lower(spec);
  CHECK(r.report.entries[1].transformation == Transformation::kLifted);
}

TEST_CASE("provenance covers every row") {
  DesignSpace space({matrix("a", {"v", "c"}, {{1, 2}, {3, 4}}), matrix("b", {"v", "c"}, {{3, 4}, {1, 1}})});
  DesignSpec spec = with_objective(space, Expr::feature(0, 0) * Expr::feature(1, 0));
  spec.constraints.push_back(parse_constraint("budget: feat(a, c) + feat(b, c) <= 4.5", space));
  spec.compat_rules.push_back({"r", 0, 0, 1, {1}, Polarity::kIncompatible});
  auto r = lower(spec);
  std::set<std::string> claimed;
  for (const auto& e : r.report.entries) {
    for (const auto& row : e.rows) CHECK(claimed.insert(row).second);
  }
  for (const auto& row : r.instance.rows) {
    CHECK_FALSE(row.source.empty());
    CHECK_FALSE(row.transformation.empty());
    if (row.kind == RowKind::kConstraint || row.kind == RowKind::kCompat) CHECK(claimed.count(row.name) == 1);
  }
  CHECK(r.report.entries.size() == 3);
}

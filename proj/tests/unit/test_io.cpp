#include <doctest.h>

#include <json.hpp>
#include <set>
#include <sstream>

#include "codesign/error.hpp"
#include "codesign/lp_format.hpp"
#include "codesign/report.hpp"
#include "test_util.hpp"

using namespace codesign;
using json = nlohmann::json;

namespace {

Problem fixture(const char* name, const ParamOverrides& o = {}) {
  return load_problem(testutil::fixture(name), o);
}

void same_instance(const BlpInstance& a, const BlpInstance& b) {
  REQUIRE(a.blocks.size() == b.blocks.size());
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    CHECK(a.blocks[i].module_id == b.blocks[i].module_id);
    CHECK(a.blocks[i].component_names == b.blocks[i].component_names);
    CHECK(a.blocks[i].optional == b.blocks[i].optional);
    CHECK(a.blocks[i].offset == b.blocks[i].offset);
  }
  REQUIRE(a.lifted.size() == b.lifted.size());
  for (std::size_t i = 0; i < a.lifted.size(); ++i) CHECK(a.lifted[i].parents == b.lifted[i].parents);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    CHECK(a.rows[r].name == b.rows[r].name);
    CHECK(a.rows[r].sense == b.rows[r].sense);
    CHECK(a.rows[r].rhs == b.rows[r].rhs);
    CHECK(a.rows[r].kind == b.rows[r].kind);
    CHECK(a.rows[r].source == b.rows[r].source);
    REQUIRE(a.rows[r].terms.size() == b.rows[r].terms.size());
    for (std::size_t t = 0; t < a.rows[r].terms.size(); ++t) {
      CHECK(a.rows[r].terms[t].var == b.rows[r].terms[t].var);
      CHECK(a.rows[r].terms[t].coef == b.rows[r].terms[t].coef);
    }
  }
  REQUIRE(a.objectives.size() == b.objectives.size());
  for (std::size_t k = 0; k < a.objectives.size(); ++k) {
    CHECK(a.objectives[k].label == b.objectives[k].label);
    CHECK(a.objectives[k].offset == b.objectives[k].offset);
    CHECK(a.objectives[k].coefs == b.objectives[k].coefs);
  }
}

}  // namespace

TEST_CASE("LP round trip on the fixtures") {
  for (const char* name : {"drone.toml", "arm.toml", "transport.toml", "cross_terms.toml", "unconstrained.toml"}) {
    CAPTURE(name);
    Problem p = fixture(name);
    auto inst = lower(p.spec).instance;
    std::string text = write_lp(inst);
    auto back = read_lp(text);
    same_instance(inst, back);
    CHECK(write_lp(back) == text);
    auto a = solve(inst);
    auto b = solve(back);
    CHECK(a.choices == b.choices);
    CHECK(a.objective_values == b.objective_values);
  }
}

TEST_CASE("multi-objective LP section") {
  auto inst = lower(fixture("arm.toml").spec).instance;
  std::string text = write_lp(inst);
  CHECK(text.find("Maximize multi-objectives") != std::string::npos);
  CHECK(text.find("Priority=2") != std::string::npos);
  CHECK(text.find("Binaries") != std::string::npos);
}

TEST_CASE("plain LP without metadata") {
  const char* lp = R"(\ hand written
Minimize
 cost: 3 a + 2 b + 4 c
Subject To
 pick: a + b + c >= 2
 pair: a + c <= 1
Binaries
 a b c
End
)";
  auto inst = read_lp(lp);
  CHECK(inst.blocks.size() == 3);
  CHECK(inst.blocks[0].optional);
  auto sol = solve(inst);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  // a+b (5) beats b+c (6)
  CHECK(sol.values[0] == 1);
  CHECK(sol.values[1] == 1);
  CHECK(sol.values[2] == 0);
  CHECK(sol.objective_values[0] == -5.0);
  CHECK(exhaustive_optimum(inst).objective_values == sol.objective_values);
}

TEST_CASE("LP errors") {
  CHECK_THROWS_AS(read_lp("Maximize\n obj: x\nSubject To\n c: x <= 1\nGenerals\n x\nEnd\n"), ParseError);
  CHECK_THROWS_AS(read_lp("Maximize\n obj: x + y\nSubject To\n c: x <= 1\nBinaries\n x\nEnd\n"), ParseError);
  CHECK_THROWS_AS(read_lp("Maximize\n obj: x\nSubject To\n c: x\nBinaries\n x\nEnd\n"), ParseError);
  CHECK_THROWS_AS(read_lp("Maximize\n obj: x\nSubject To\n c: x <= y\nBinaries\n x y\nEnd\n"), ParseError);
  CHECK_THROWS_AS(read_lp("obj: x\n"), ParseError);
  CHECK_THROWS_AS(read_lp("Maximize\n obj: x $ 2\nBinaries\n x\nEnd\n"), ParseError);
  BlpInstance empty;
  CHECK_THROWS_AS(write_lp(empty), SchemaError);
}

TEST_CASE("provenance lists every row") {
  auto p = fixture("drone.toml");
  auto r = lower(p.spec);
  json j = json::parse(provenance_json(r.instance, r.report));
  CHECK(j["rows"].size() == r.instance.rows.size());
  CHECK(j["variables"].size() == r.instance.num_variables());
  CHECK(j["lowering"].size() == r.report.entries.size());
}

TEST_CASE("design index decoding") {
  DesignSpace space({testutil::matrix("a", {"f"}, {{1, 2}}), testutil::matrix("b", {"f"}, {{1, 2, 3}}, true)});
  std::uint64_t i = 0;
  for (const auto& x : enumerate_designs(space)) {
    CHECK(design_at(space, i).choices() == x.choices());
    ++i;
  }
  CHECK(i == 8);
  CHECK(design_at(space, 0).choices() == std::vector<int>{0, DesignVector::kNone});
}

TEST_CASE("drone sweep") {
  auto p = fixture("drone.toml");
  std::ostringstream out;
  SweepSummary s = write_sweep_csv(p.spec, {}, out);
  CHECK(s.rows == 72);
  CHECK(s.feasible == 21);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("design_id,", 0) == 0);
  CHECK(header.find(",feasible") != std::string::npos);
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 72);

  SweepOptions small;
  small.cap = 10;
  std::ostringstream o2;
  CHECK_THROWS_AS(write_sweep_csv(p.spec, small, o2), CapacityError);
  small.sample = 10;
  small.seed = 3;
  std::ostringstream o3, o4;
  CHECK(write_sweep_csv(p.spec, small, o3).rows == 10);
  write_sweep_csv(p.spec, small, o4);
  CHECK(o3.str() == o4.str());
  // sampled ids are distinct and ascending
  std::istringstream in3(o3.str());
  std::getline(in3, header);
  long prev = -1;
  for (std::string l; std::getline(in3, l);) {
    long id = std::stol(l.substr(0, l.find(',')));
    CHECK(id > prev);
    prev = id;
  }
}

TEST_CASE("solution JSON is byte-stable in deterministic mode") {
  for (const char* name : {"drone.toml", "transport_heavy.toml", "arm.toml"}) {
    CAPTURE(name);
    auto p = fixture(name);
    auto a = solve_problem(p);
    auto b = solve_problem(p);
    std::string ja = solution_json(p, a, nullptr, false);
    CHECK(ja == solution_json(p, b, nullptr, false));
    json j = json::parse(ja);
    CHECK(j["status"] == "optimal");
    CHECK_FALSE(j.contains("wall_time"));
    CHECK(json::parse(solution_json(p, a, nullptr, true)).contains("wall_time"));
  }
}

TEST_CASE("heavy transport team has a sensorless carrier") {
  auto p = fixture("transport_heavy.toml");
  auto out = solve_problem(p);
  json j = json::parse(solution_json(p, out, nullptr, false));
  CHECK(j["team"]["size"] == 4);
  CHECK(j["team"]["sensorless_carriers"].get<int>() >= 1);
  auto light = fixture("transport.toml");
  json jl = json::parse(solution_json(light, solve_problem(light), nullptr, false));
  CHECK(jl["team"]["size"] == 2);
}

TEST_CASE("oracle check on the fixtures") {
  for (const char* name : {"drone.toml", "drone_unique.toml", "arm.toml", "unconstrained.toml", "cross_terms.toml"}) {
    CAPTURE(name);
    auto p = fixture(name);
    auto out = solve_problem(p);
    auto oc = oracle_check(p, out, true, kDefaultEnumerationCap);
    CHECK(oc.ran);
    CHECK(oc.agrees);
    for (const auto& m : oc.mismatches) MESSAGE(m);
  }
  auto p = fixture("drone.toml");
  auto oc = oracle_check(p, solve_problem(p), true, 10);
  CHECK_FALSE(oc.ran);
  CHECK_FALSE(oc.skipped_reason.empty());
}

TEST_CASE("oracle flags a tampered solution") {
  auto p = fixture("unconstrained.toml");
  auto out = solve_problem(p);
  REQUIRE(out.solution.status == SolveStatus::kOptimal);
  out.solution.objective_values[0] -= 1.0;
  auto oc = oracle_check(p, out, true, kDefaultEnumerationCap);
  CHECK(oc.ran);
  CHECK_FALSE(oc.agrees);
  CHECK_FALSE(oc.mismatches.empty());
}

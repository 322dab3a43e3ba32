#include <doctest.h>

#include <cstdlib>
#include <limits>
#include <set>

#include "codesign/catalog.hpp"
#include "codesign/error.hpp"
#include "test_util.hpp"

using namespace codesign;
using testutil::matrix;

TEST_CASE("motor catalog with five features and three components") {
  auto motor = matrix("motor", {"W", "V", "A", "C", "T"},
                      {{0.03, 0.04, 0.05}, {14.8, 14.8, 22.2}, {10, 12, 15}, {20, 25, 32}, {0.1, 0.2, 0.3}});
  DesignSpace space({motor});
  CHECK(space.num_modules() == 1);
  CHECK(space.module(0).num_components() == 3);
  CHECK(space.total_dim() == 3);
  auto torque = feature_row(space, "motor", "T");
  CHECK(torque == std::vector<double>{0.1, 0.2, 0.3});
  // x = (0, 1, 0) picks the middle column
  DesignVector x({1});
  auto block = x.block(space, 0);
  double dot = 0.0;
  for (std::size_t j = 0; j < 3; ++j) dot += torque[j] * block[j];
  CHECK(dot == 0.2);
}

TEST_CASE("minimal catalog") {
  DesignSpace space({matrix("m", {"f"}, {{0.0}})});
  CHECK(space.total_dim() == 1);
  CHECK(space.design_count() == 1);
}

TEST_CASE("N is the sum of the catalog sizes") {
  std::vector<double> a(17, 1.0), b(12, 2.0);
  DesignSpace space({matrix("a", {"f"}, {a}), matrix("b", {"f"}, {b})});
  CHECK(space.total_dim() == 29);
  CHECK(space.offset(1) == 17);
}

TEST_CASE("feature matrix validation") {
  std::vector<Feature> f{{"x", ""}};
  CHECK_THROWS_AS(FeatureMatrix("m", f, {}, {}), SchemaError);
  CHECK_THROWS_AS(FeatureMatrix("m", f, {"a", "a"}, {{1.0}, {2.0}}), SchemaError);
  CHECK_THROWS_AS(FeatureMatrix("m", {{"x", ""}, {"x", ""}}, {"a"}, {{1.0, 2.0}}), SchemaError);
  CHECK_THROWS_AS(FeatureMatrix("m", f, {"a", "b"}, {{1.0}, {2.0, 3.0}}), SchemaError);
  CHECK_THROWS_AS(FeatureMatrix("m", f, {"a"}, {{std::numeric_limits<double>::infinity()}}), SchemaError);
  CHECK_THROWS_AS(FeatureMatrix("m", f, {"a"}, {{std::nan("")}}), SchemaError);
  try {
    FeatureMatrix("motor", {{"thrust", "N"}}, {"a"}, {{std::nan("")}});
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    std::string msg = e.what();
    CHECK(msg.find("motor") != std::string::npos);
    CHECK(msg.find("thrust") != std::string::npos);
  }
}

TEST_CASE("duplicate module ids are rejected") {
  CHECK_THROWS_AS(DesignSpace({matrix("m", {"f"}, {{1.0}}), matrix("m", {"f"}, {{2.0}})}), SchemaError);
}

TEST_CASE("lookups") {
  DesignSpace space({matrix("m", {"f", "g"}, {{1, 2}, {3, 4}})});
  CHECK_THROWS_AS(feature_row(space, "nope", "f"), LookupError);
  CHECK_THROWS_AS(feature_row(space, "m", "nope"), LookupError);
  CHECK(space.module(0).require_component("c1") == 1);
  CHECK_THROWS_AS(space.module(0).require_component("c9"), LookupError);
}

TEST_CASE("selection identity on random catalogs") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> val(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng() % 6, nf = 1 + rng() % 4;
    std::vector<std::vector<double>> rows(nf, std::vector<double>(n));
    for (auto& r : rows)
      for (auto& v : r) v = val(rng);
    std::vector<std::string> names;
    for (std::size_t f = 0; f < nf; ++f) names.push_back("f" + std::to_string(f));
    DesignSpace space({matrix("m", names, rows)});
    for (std::size_t j = 0; j < n; ++j) {
      auto block = DesignVector({static_cast<int>(j)}).block(space, 0);
      for (std::size_t f = 0; f < nf; ++f) {
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += rows[f][k] * block[k];
        CHECK(dot == space.module(0).column(j)[f]);
      }
    }
  }
}

TEST_CASE("enumeration counts and order") {
  DesignSpace two({matrix("a", {"f"}, {{1, 2}}), matrix("b", {"f"}, {{1, 2, 3}})});
  std::vector<std::vector<int>> seen;
  for (const auto& x : enumerate_designs(two)) seen.push_back(x.choices());
  REQUIRE(seen.size() == 6);
  CHECK(seen.front() == std::vector<int>{0, 0});
  CHECK(seen[1] == std::vector<int>{0, 1});
  CHECK(seen.back() == std::vector<int>{1, 2});

  DesignSpace three({matrix("a", {"f"}, {{1, 2, 3}}), matrix("b", {"f"}, {{1, 2, 3}}),
                     matrix("c", {"f"}, {{1, 2, 3}})});
  std::set<std::vector<std::uint8_t>> distinct;
  for (const auto& x : enumerate_designs(three)) {
    validate_design(three, x);
    for (std::size_t i = 0; i < 3; ++i) {
      auto b = x.block(three, i);
      CHECK(std::count(b.begin(), b.end(), 1) == 1);
    }
    distinct.insert(x.stacked(three));
  }
  CHECK(distinct.size() == 27);
}

TEST_CASE("per-robot combination count") {
  std::vector<double> ten(10, 1.0), two(2, 1.0);
  DesignSpace robot({matrix("motor", {"f"}, {ten}), matrix("battery", {"f"}, {ten}),
                     matrix("sensor", {"f"}, {ten}), matrix("frame", {"f"}, {two})});
  CHECK(robot.design_count() == 2000);
}

TEST_CASE("optional modules add the empty choice") {
  DesignSpace space({matrix("a", {"f"}, {{1, 2}}), matrix("s", {"f"}, {{5, 6, 7}}, true)});
  CHECK(space.design_count() == 8);
  std::vector<std::vector<int>> seen;
  for (const auto& x : enumerate_designs(space)) seen.push_back(x.choices());
  CHECK(seen.front() == std::vector<int>{0, DesignVector::kNone});
  DesignVector empty({0, DesignVector::kNone});
  validate_design(space, empty);
  auto b = empty.block(space, 1);
  CHECK(std::count(b.begin(), b.end(), 1) == 0);
  // a required module may not be empty
  CHECK_THROWS_AS(validate_design(space, DesignVector({DesignVector::kNone, 0})), DomainError);
  CHECK_THROWS_AS(design_from_blocks(space, {{1, 1}, {0, 0, 0}}), DomainError);
  auto round = design_from_blocks(space, {{0, 1}, {0, 0, 1}});
  CHECK(round.choices() == std::vector<int>{1, 2});
}

TEST_CASE("enumeration cap") {
  std::vector<double> ten(10, 1.0);
  DesignSpace space({matrix("a", {"f"}, {ten}), matrix("b", {"f"}, {ten}), matrix("c", {"f"}, {ten})});
  CHECK_THROWS_AS(enumerate_designs(space, 999), CapacityError);
  CHECK_NOTHROW(enumerate_designs(space, 1000));
}

TEST_CASE("enumeration cap from the environment") {
  setenv("CODESIGN_ENUM_CAP", "1234", 1);
  CHECK(enumeration_cap_from_env() == 1234);
  setenv("CODESIGN_ENUM_CAP", "garbage", 1);
  CHECK(enumeration_cap_from_env() == kDefaultEnumerationCap);
  unsetenv("CODESIGN_ENUM_CAP");
  CHECK(enumeration_cap_from_env() == kDefaultEnumerationCap);
}

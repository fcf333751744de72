#include <string>

#include <doctest.h>

#include "gridsiting/errors.h"
#include "gridsiting/grid_model.h"
#include "test_support.h"

using namespace gridsiting;

namespace {

const char* kMinimal = R"({
  "buses": [{"id": "b1", "x_km": 0, "y_km": 0, "base_demand_mw": 10, "mean_temp_c": 20}],
  "lines": [],
  "generators": [{"id": "g1", "bus": "b1", "capacity_mw": 15, "marginal_cost": 2,
                  "kind": "existing"}],
  "response": {"comfort_lo_c": 15, "comfort_hi_c": 25, "demand_slope_per_c": 0.02,
               "derate_start_c": 5, "derate_full_c": 15, "derate_max_frac": 0.4,
               "shed_penalty": 100}
})";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

template <typename E>
std::string error_of(const std::string& text) {
  try {
    load_instance(text);
  } catch (const E& e) {
    return e.what();
  }
  FAIL("expected an error");
  return {};
}

ResponseParams band_15_25() {
  ResponseParams p;
  p.comfort_lo_c = 15;
  p.comfort_hi_c = 25;
  p.demand_slope_per_c = 0.02;
  p.derate_start_c = 5;
  p.derate_full_c = 15;
  p.derate_max_frac = 0.4;
  return p;
}

}  // namespace

TEST_CASE("minimal instance loads") {
  const GridInstance g = load_instance(kMinimal);
  CHECK(g.num_buses() == 1);
  CHECK(g.lines().empty());
  CHECK(g.num_generators() == 1);
  CHECK(g.num_sites() == 0);
  CHECK(g.generator_site(0) == -1);
  CHECK(g.response().shed_penalty == 100);
}

TEST_CASE("dangling line endpoint is rejected") {
  std::string text = replace(kMinimal, R"("lines": [])",
                             R"("lines": [{"from_bus": "b1", "to_bus": "bus9", "capacity_mw": 5}])");
  CHECK(error_of<ValidationError>(text).find("unknown bus id") != std::string::npos);
}

TEST_CASE("negative capacity is rejected") {
  std::string text = replace(kMinimal, R"("capacity_mw": 15)", R"("capacity_mw": -5)");
  CHECK(error_of<ValidationError>(text).find("negative capacity") != std::string::npos);
}

TEST_CASE("duplicate ids are rejected") {
  std::string text = replace(
      kMinimal, R"("mean_temp_c": 20}])",
      R"("mean_temp_c": 20}, {"id": "b1", "x_km": 1, "y_km": 0, "base_demand_mw": 1, "mean_temp_c": 20}])");
  CHECK(error_of<ValidationError>(text).find("duplicate id") != std::string::npos);
}

TEST_CASE("other invariants") {
  CHECK_THROWS_AS(load_instance(replace(kMinimal, R"("base_demand_mw": 10)",
                                        R"("base_demand_mw": -1)")),
                  ValidationError);
  CHECK_THROWS_AS(load_instance(replace(kMinimal, R"("derate_full_c": 15)",
                                        R"("derate_full_c": 5)")),
                  ValidationError);
  CHECK_THROWS_AS(load_instance(replace(kMinimal, R"("shed_penalty": 100)",
                                        R"("shed_penalty": 0)")),
                  ValidationError);
  CHECK_THROWS_AS(load_instance(replace(kMinimal, R"("kind": "existing")",
                                        R"("kind": "candidate")")),
                  ParseError);  // candidate without build_cost
  CHECK_THROWS_AS(load_instance(replace(kMinimal, R"("kind": "existing")",
                                        R"("kind": "existing", "build_cost": 3)")),
                  ValidationError);
  CHECK_THROWS_AS(load_instance(replace(kMinimal, R"("buses": [{"id": "b1", "x_km": 0, "y_km": 0, "base_demand_mw": 10, "mean_temp_c": 20}],)",
                                        R"("buses": [],)")),
                  ValidationError);
  CHECK_THROWS_AS(
      load_instance(replace(kMinimal, R"("lines": [])",
                            R"("lines": [{"from_bus": "b1", "to_bus": "b1", "capacity_mw": 5}])")),
      ValidationError);
}

TEST_CASE("unknown fields and malformed text are parse errors") {
  const std::string typo = error_of<ParseError>(
      replace(kMinimal, R"("x_km": 0,)", R"("x_km": 0, "xkm": 1,)"));
  CHECK(typo.find("xkm") != std::string::npos);
  const std::string broken = error_of<ParseError>("{\n  \"buses\": [\n  oops\n}");
  CHECK(broken.find("line 3") != std::string::npos);
  CHECK_THROWS_AS(load_instance(replace(kMinimal, R"("x_km": 0,)", R"("x_km": "zero",)")),
                  ParseError);
  CHECK_THROWS_AS(load_instance(replace(kMinimal, R"("lines": [],)", "")), ParseError);
}

TEST_CASE("serialization round-trips") {
  testing::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const GridInstance g = testing::random_instance(rng);
    const std::string text = serialize_instance(g);
    const GridInstance h = load_instance(text);
    REQUIRE(h.num_buses() == g.num_buses());
    for (int b = 0; b < g.num_buses(); ++b) {
      CHECK(h.buses()[b].id == g.buses()[b].id);
      CHECK(h.buses()[b].x_km == g.buses()[b].x_km);
      CHECK(h.buses()[b].y_km == g.buses()[b].y_km);
      CHECK(h.buses()[b].base_demand_mw == g.buses()[b].base_demand_mw);
      CHECK(h.buses()[b].mean_temp_c == g.buses()[b].mean_temp_c);
    }
    REQUIRE(h.lines().size() == g.lines().size());
    for (std::size_t l = 0; l < g.lines().size(); ++l) {
      CHECK(h.lines()[l].from_bus == g.lines()[l].from_bus);
      CHECK(h.lines()[l].capacity_mw == g.lines()[l].capacity_mw);
    }
    REQUIRE(h.num_generators() == g.num_generators());
    for (int k = 0; k < g.num_generators(); ++k) {
      CHECK(h.generators()[k].capacity_mw == g.generators()[k].capacity_mw);
      CHECK(h.generators()[k].marginal_cost == g.generators()[k].marginal_cost);
      CHECK(h.generators()[k].build_cost == g.generators()[k].build_cost);
      CHECK(h.generators()[k].kind == g.generators()[k].kind);
    }
    CHECK(h.response().derate_max_frac == g.response().derate_max_frac);
    CHECK(h.response().shed_penalty == g.response().shed_penalty);
    CHECK(serialize_instance(h) == text);
  }
}

TEST_CASE("demand response") {
  const ResponseParams p = band_15_25();
  Bus bus;
  bus.base_demand_mw = 100;
  CHECK(demand_at(bus, 20, p) == doctest::Approx(100));
  CHECK(demand_at(bus, 35, p) == doctest::Approx(120));
  CHECK(demand_at(bus, 5, p) == doctest::Approx(120));
  CHECK(demand_at(bus, 15, p) == doctest::Approx(100));
  CHECK(demand_at(bus, 25, p) == doctest::Approx(100));
}

TEST_CASE("available capacity") {
  const ResponseParams p = band_15_25();
  GeneratorSpec gen;
  gen.capacity_mw = 50;
  CHECK(available_capacity(gen, 20, p) == doctest::Approx(50));  // delta 0
  CHECK(available_capacity(gen, 40, p) == doctest::Approx(30));  // delta 15
  CHECK(available_capacity(gen, 0, p) == doctest::Approx(30));   // delta 15, cold
  CHECK(available_capacity(gen, 35, p) == doctest::Approx(40));  // delta 10
  CHECK(available_capacity(gen, 60, p) == doctest::Approx(30));  // saturated
  CHECK(available_capacity(gen, 30, p) == doctest::Approx(50));  // delta 5, not yet
}

TEST_CASE("response maps are continuous and monotone") {
  const ResponseParams p = band_15_25();
  Bus bus;
  bus.base_demand_mw = 80;
  GeneratorSpec gen;
  gen.capacity_mw = 70;
  const double eps = 0.01;
  double prev_cap = gen.capacity_mw;
  for (double t = -30; t <= 60; t += eps) {
    const double d0 = demand_at(bus, t, p);
    const double d1 = demand_at(bus, t + eps, p);
    CHECK(std::fabs(d1 - d0) <= bus.base_demand_mw * p.demand_slope_per_c * eps + 1e-12);
    CHECK(d0 >= bus.base_demand_mw);
    const double cap = available_capacity(gen, t, p);
    CHECK(cap <= gen.capacity_mw);
    CHECK(cap >= gen.capacity_mw * (1 - p.derate_max_frac) - 1e-12);
    if (comfort_deviation(t, p) <= p.derate_start_c) CHECK(cap == gen.capacity_mw);
    if (t >= 20) {
      CHECK(cap <= prev_cap + 1e-12);  // deviation grows with t above the band
      prev_cap = cap;
    }
  }
}

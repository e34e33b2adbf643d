#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace busdrive;

namespace {

json t1_doc() { return json::parse(fx::read_file(fx::data_path("t1.json"))); }

std::string parse_error(const json& doc) {
  try {
    parse_instance(doc);
  } catch (const InstanceError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ParseInstance, FixtureT1Shape) {
  const auto inst = fx::fixture("t1");
  EXPECT_EQ(inst.terminals.size(), 2u);
  EXPECT_EQ(inst.trips.size(), 2u);
  EXPECT_EQ(inst.grids.size(), 1u);
  EXPECT_EQ(inst.periods(), 2);
  EXPECT_TRUE(validate_instance(inst).empty());
}

TEST(ParseInstance, FixtureT2Shape) {
  const auto inst = fx::fixture("t2");
  EXPECT_EQ(inst.terminals.size(), 4u);
  EXPECT_EQ(inst.trips.size(), 4u);
  EXPECT_EQ(inst.grids.size(), 2u);
  EXPECT_EQ(inst.fleet.total_buses, 3);
  EXPECT_EQ(inst.fleet.max_ib, 1);
  EXPECT_TRUE(validate_instance(inst).empty());
}

TEST(ParseInstance, RoundTripIsCanonical) {
  for (const char* name : {"t1", "t2"}) {
    const auto once = serialize(fx::fixture(name));
    const auto twice = serialize(parse_instance(once));
    EXPECT_EQ(once, twice) << name;
  }
}

TEST(ParseInstance, WeightsNormalized) {
  auto doc = t1_doc();
  doc["grids"] = json::array({{{"id", "g1"}, {"weights", {1.5, 0.5}}}});
  const auto inst = parse_instance(doc);
  EXPECT_NEAR(inst.grids[0].weights[0], 0.75, 1e-12);
  EXPECT_NEAR(inst.grids[0].weights[1], 0.25, 1e-12);
  EXPECT_NEAR(inst.total_weight(), 1.0, 1e-9);
}

TEST(ParseInstance, ScalarWeightBroadcastOverPeriods) {
  const auto inst = fx::fixture("t1");
  ASSERT_EQ(inst.grids[0].weights.size(), 2u);
  EXPECT_NEAR(inst.grids[0].weights[0], 0.5, 1e-12);
  EXPECT_NEAR(inst.grids[0].weights[1], 0.5, 1e-12);
}

TEST(ParseInstance, SchemaErrorsCarryPath) {
  auto doc = t1_doc();
  doc["trips"][1]["depart"] = "three";
  EXPECT_NE(parse_error(doc).find("/trips/1/depart"), std::string::npos);
  doc = t1_doc();
  doc.erase("horizon");
  EXPECT_NE(parse_error(doc).find("horizon"), std::string::npos);
}

TEST(ParseInstance, InvariantErrorsNamed) {
  auto doc = t1_doc();
  doc["trips"][0]["arrive"] = 0;
  EXPECT_NE(parse_error(doc).find("arrive<=depart"), std::string::npos);
}

TEST(ParseInstance, DefaultPwlIsThreeSegmentSqrt) {
  const auto inst = fx::fixture("t1");
  ASSERT_EQ(inst.pwl.segments.size(), 3u);
  EXPECT_NEAR(inst.pwl(0.5), 0.5, 1e-12);
  EXPECT_NEAR(inst.pwl(2.0), 0.366 * 2.0 + 0.634, 1e-12);
  EXPECT_NEAR(inst.pwl(10.0), 1.732, 1e-12);
}

TEST(ValidateInstance, BadTripReported) {
  auto inst = fx::fixture("t1");
  inst.trips[0].arrive = inst.trips[0].depart;
  const auto v = validate_instance(inst);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "trip out: arrive<=depart");
}

TEST(ValidateInstance, UnknownTerminalNamesTripAndTerminal) {
  auto inst = fx::fixture("t1");
  inst.trips[1].to = "Z";
  const auto v = validate_instance(inst);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("back"), std::string::npos);
  EXPECT_NE(v[0].find("Z"), std::string::npos);
}

TEST(ValidateInstance, HorizonMustBeMultipleOfDeltaK) {
  auto inst = fx::fixture("t1");
  inst.sensing.delta_k_steps = 4;
  const auto v = validate_instance(inst);
  ASSERT_FALSE(v.empty());
  EXPECT_NE(v[0].find("sensing"), std::string::npos);
}

TEST(ValidateInstance, PwlRules) {
  auto inst = fx::fixture("t1");
  inst.pwl = PiecewiseConcave{{{1.0, 0.0}, {1.0, 0.5}}};
  EXPECT_FALSE(validate_instance(inst).empty());
  inst.pwl = PiecewiseConcave{{{1.0, 0.2}, {0.5, 0.5}}};
  EXPECT_FALSE(validate_instance(inst).empty());
}

TEST(ValidateInstance, FleetAndCosts) {
  auto inst = fx::fixture("t1");
  inst.fleet.max_ib = 3;
  EXPECT_EQ(validate_instance(inst), std::vector<std::string>{"fleet: max_ib exceeds total"});
  inst = fx::fixture("t1");
  inst.costs.per_minute = -1;
  EXPECT_EQ(validate_instance(inst), std::vector<std::string>{"costs: must be non-negative"});
}

TEST(ValidateInstance, MissingDepotLegNamed) {
  auto inst = fx::fixture("t1");
  inst.relocations.pop_back();
  const auto v = validate_instance(inst);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "depot leg missing: B->A");
}

TEST(Generator, Deterministic) {
  GeneratorParams p;
  p.seed = 1;
  p.lines = 6;
  p.hours = 6;
  p.headway_steps = 1;
  EXPECT_EQ(serialize(generate_instance(p)), serialize(generate_instance(p)));
}

TEST(Generator, SeedChangesTrips) {
  GeneratorParams a;
  GeneratorParams b;
  b.seed = 2;
  const auto ia = generate_instance(a);
  const auto ib = generate_instance(b);
  EXPECT_NE(serialize(ia), serialize(ib));
}

TEST(Generator, SmallInstanceValid) {
  GeneratorParams p;
  p.seed = 7;
  p.lines = 2;
  p.hours = 2;
  p.headway_steps = 2;
  const auto inst = generate_instance(p);
  EXPECT_TRUE(validate_instance(inst).empty());
  EXPECT_GE(inst.trips.size(), 4u);
  EXPECT_DOUBLE_EQ(inst.costs.fixed_bus, 856.0);
  EXPECT_DOUBLE_EQ(inst.costs.per_minute, 1.4);
  EXPECT_DOUBLE_EQ(inst.costs.relocation_fixed, 20.0);
}

TEST(Generator, ManySeedsValidateAndRoundTrip) {
  for (std::uint64_t s = 1; s <= 25; ++s) {
    GeneratorParams p;
    p.seed = s;
    p.lines = 1 + static_cast<int>(s % 6);
    p.hours = 1 + static_cast<int>(s % 4);
    p.headway_steps = 1 + static_cast<int>(s % 3);
    const auto inst = generate_instance(p);
    EXPECT_TRUE(validate_instance(inst).empty()) << s;
    EXPECT_NEAR(inst.total_weight(), 1.0, 1e-9);
    EXPECT_EQ(serialize(parse_instance(serialize(inst))), serialize(inst)) << s;
  }
}

TEST(Generator, RejectsZeroLines) {
  GeneratorParams p;
  p.lines = 0;
  EXPECT_THROW(generate_instance(p), InstanceError);
}

TEST(DeltaK, RebucketKeepsGridTotals) {
  auto inst = fx::fixture("t2");
  const auto coarse = with_delta_k(inst, 6);
  ASSERT_EQ(coarse.periods(), 1);
  EXPECT_NEAR(coarse.grids[0].weights[0], 0.5, 1e-12);
  EXPECT_NEAR(coarse.grids[1].weights[0], 0.5, 1e-12);
  const auto fine = with_delta_k(inst, 1);
  EXPECT_EQ(fine.periods(), 6);
  EXPECT_NEAR(fine.total_weight(), 1.0, 1e-9);
}

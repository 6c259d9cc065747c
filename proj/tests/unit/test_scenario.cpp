#include <set>

#include "doctest.h"
#include "files.hpp"
#include "prk/scenario.hpp"

using namespace prk;

namespace {

Scenario bundled(const char* name) {
  return parse_scenario(testfs::slurp(testfs::data(std::string("scenarios/") + name + ".rsc")));
}

std::string scenario_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("parses the bundled scenarios") {
    Scenario s = bundled("turn-away");
    CHECK(s.name == "turn-away");
    CHECK(s.seed == 11);
    CHECK(s.steps == 10);
    REQUIRE(s.objects.size() == 1);
    CHECK(s.objects[0].klass == "hostile");
    CHECK(s.objects[0].heading == 180);
    REQUIRE(s.orders.size() == 1);
    CHECK(s.orders[0].at == 4);
    CHECK(*s.orders[0].speed == 3);
    CHECK(s.own.size() == 2);
    CHECK(s.sensor.noise == 0.05);

    Scenario gap = bundled("visibility-gap");
    CHECK(gap.objects.size() == 2);
    CHECK(gap.sensor.blind == std::vector<std::pair<int, int>>{{3, 6}});
  }

  TEST_CASE("malformed scenarios are rejected") {
    CHECK(scenario_error("(ownship :x 0 :y 0)").find("no (scenario NAME") != std::string::npos);
    CHECK(scenario_error("(scenario a :seed 1 :steps 5)(order s9 :at 1 :speed 2)").find("unknown object s9") !=
          std::string::npos);
    CHECK(scenario_error("(scenario a :seed 1 :steps 5)(object s1 :x 0 :y 1 :heading 0 :speed 1)"
                         "(order s1 :at 9 :speed 2)")
              .find("after the last step") != std::string::npos);
    CHECK(scenario_error("(scenario a :seed 1 :steps 2.5)").find("non-negative integer") != std::string::npos);
    CHECK(scenario_error("(scenario a :seed 1").rfind("scenario 1:", 0) == 0);
  }

  TEST_CASE("simulation is deterministic") {
    Scenario s = bundled("visibility-gap");
    ScenarioOutput a = run_scenario(s);
    ScenarioOutput b = run_scenario(s);
    CHECK(a.truth == b.truth);
    CHECK(write_track(a.track) == write_track(b.track));
    s.seed = 38;
    CHECK(write_track(run_scenario(s).track) != write_track(a.track));
  }

  TEST_CASE("turn-away truth labels") {
    GroundTruth g = run_scenario(bundled("turn-away")).truth;
    for (int t = 0; t <= 3; ++t) {
      CHECK(*g.label(t, "s1", "approaching"));
      CHECK(*g.label(t, "s1", "threat"));
      CHECK_FALSE(*g.label(t, "s1", "turn-away"));
    }
    for (int t = 4; t <= 7; ++t) {
      CHECK(*g.label(t, "s1", "turn-away"));
      CHECK(*g.label(t, "s1", "turn-away-and-run"));
      CHECK(*g.label(t, "s1", "withdrawing"));
    }
    CHECK_FALSE(*g.label(8, "s1", "turn-away"));
    CHECK(*g.label(8, "s1", "withdrawing"));
    CHECK_FALSE(g.label(11, "s1", "turn-away").has_value());
    CHECK_FALSE(g.label(2, "s2", "turn-away").has_value());
    for (const char* l : kTruthLabels) CHECK(g.has_label(l));
    CHECK_FALSE(g.has_label("sinking"));
  }

  TEST_CASE("truth files round trip") {
    GroundTruth g = run_scenario(bundled("visibility-gap")).truth;
    std::string text = write_truth(g);
    CHECK(text.rfind("RGT1\n", 0) == 0);
    CHECK(read_truth(text) == g);
    CHECK_THROWS_AS(read_truth("scenario x\n"), ScenarioError);
    CHECK_THROWS_AS(read_truth("RGT1\nstate 0 s1 0 0\n"), ScenarioError);
  }

  TEST_CASE("no perception records inside the blind window") {
    ScenarioOutput out = run_scenario(bundled("visibility-gap"));
    std::set<double> phases;
    for (const TrackRecord& r : out.track.records) {
      if (r.object != "-") phases.insert(r.t);
    }
    for (double t : {3.0, 4.0, 5.0, 6.0}) CHECK_FALSE(phases.count(t));
    for (double t : {0.0, 2.0, 7.0, 10.0}) CHECK(phases.count(t));
  }

  TEST_CASE("discretization thresholds") {
    // own ship at the origin, contact due north
    CHECK(classify_aspect(0, 10, 180, 1, 0, 0) == "closing");
    CHECK(classify_aspect(0, 10, 0, 1, 0, 0) == "opening");
    CHECK(classify_aspect(0, 10, 90, 1, 0, 0) == "crossing");
    CHECK(classify_aspect(0, 10, 180 + 59, 1, 0, 0) == "closing");
    CHECK(classify_aspect(0, 10, 180 + 61, 1, 0, 0) == "crossing");
    CHECK(classify_aspect(0, 10, 61, 1, 0, 0) == "crossing");
    CHECK(classify_aspect(0, 10, 59, 1, 0, 0) == "opening");
    CHECK(classify_aspect(0, 10, 180, 0, 0, 0) == "crossing");
    CHECK(classify_range(0, 6, 0, 0) == "near");
    CHECK(classify_range(0, 6.01, 0, 0) == "medium");
    CHECK(classify_range(12, 0, 0, 0) == "medium");
    CHECK(classify_range(12.01, 0, 0, 0) == "far");
    CHECK(classify_speed(2) == "fast");
    CHECK(classify_speed(1.99) == "slow");
  }
}

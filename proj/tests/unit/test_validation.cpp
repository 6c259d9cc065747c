#include "doctest.h"
#include "files.hpp"
#include "prk/network_io.hpp"
#include "prk/validation.hpp"

using namespace prk;

namespace {

struct Bundled {
  CompiledNetwork net = compile(parse_kb(testfs::slurp(testfs::data("situation.rkb"))));
  LabelMap map = parse_label_map(testfs::slurp(testfs::data("situation.rmap")));
  ScenarioOutput out;

  explicit Bundled(const char* scenario)
      : out(run_scenario(parse_scenario(testfs::slurp(testfs::data(std::string("scenarios/") + scenario + ".rsc"))))) {}
};

const GoalReport& goal(const ValidationReport& r, const std::string& id) {
  for (const GoalReport& g : r.goals) {
    if (g.goal == id) return g;
  }
  throw std::runtime_error("no goal " + id);
}

}  // namespace

TEST_SUITE("validation") {
  TEST_CASE("label maps") {
    LabelMap m = parse_label_map("(threshold 0.7)\n(map run :value yes :label turn-away-and-run)\n(map a :label approaching)");
    CHECK(m.threshold == 0.7);
    REQUIRE(m.mappings.size() == 2);
    CHECK(m.find("run")->value == "yes");
    CHECK(m.find("a")->value == "true");
    CHECK(m.find("zz") == nullptr);
    CHECK_THROWS_AS(parse_label_map("(threshold 1.5)"), MappingError);
    CHECK_THROWS_AS(parse_label_map("(map a)"), MappingError);
    CHECK_THROWS_AS(parse_label_map("(map a :label x)(map a :label y)"), MappingError);
    CHECK_THROWS_AS(parse_label_map("(map a :label x :color red)"), MappingError);
    CHECK_THROWS_AS(parse_label_map("(mapping a :label x)"), MappingError);
    CHECK_THROWS_AS(parse_label_map("(map a :label x"), MappingError);
  }

  TEST_CASE("turn-away is believed at the maneuver step") {
    Bundled b("turn-away");
    ValidationReport r = validate(b.net, b.out.track, b.out.truth, b.map);
    CHECK(r.scenario == "turn-away");
    CHECK(r.phases == 11);
    CHECK(r.goals.size() == 5);
    const GoalReport& run = goal(r, "turn-away-and-run(s1)");
    REQUIRE(run.first_believed);
    CHECK(*run.first_believed == 4);
    CHECK(*run.first_true == 4);
    CHECK(run.agree == run.phases);
    CHECK(run.dominant.front() == "run-fast");
    const GoalReport& near = goal(r, "approaching(s1)");
    CHECK(*near.first_believed == 0);
    CHECK(near.final_interval.lb < r.threshold);
  }

  TEST_CASE("the blind window delays belief until the next phase") {
    Bundled b("visibility-gap");
    ValidationReport r = validate(b.net, b.out.track, b.out.truth, b.map, PredicateRegistry::with_builtins(),
                                  {"turn-away"});
    CHECK(r.goals.size() == 2);
    const GoalReport& s1 = goal(r, "turn-away(s1)");
    CHECK(*s1.first_believed == 7);
    CHECK_FALSE(goal(r, "turn-away(s2)").first_believed);
  }

  TEST_CASE("mapping errors") {
    Bundled b("turn-away");
    CHECK_THROWS_AS(validate(b.net, b.out.track, b.out.truth, b.map, PredicateRegistry::with_builtins(), {"sinking"}),
                    MappingError);
    LabelMap bad = parse_label_map("(map approaching :label ghost)");
    CHECK_THROWS_AS(validate(b.net, b.out.track, b.out.truth, bad), MappingError);
  }

  TEST_CASE("report formats") {
    Bundled b("turn-away");
    ValidationReport r = validate(b.net, b.out.track, b.out.truth, b.map, PredicateRegistry::with_builtins(),
                                  {"turn-away-and-run"});
    std::string rec = r.format_records();
    CHECK(rec.rfind("(validation :scenario turn-away :threshold 0.5 :phases 11 :goals 1)\n", 0) == 0);
    CHECK(rec.find("(goal \"turn-away-and-run(s1)\" :label turn-away-and-run :first-believed 4 :first-true 4") !=
          std::string::npos);
    CHECK(r.format_text().find("believed from 4, true from 4") != std::string::npos);
  }

  TEST_CASE("dominant chain follows the strongest derived premise") {
    Engine e(parse_kb(R"(
      (rule r1 :premises (a) :sufficiency 0.9 :conclusion m)
      (rule r2 :premises (b) :sufficiency 0.4 :conclusion n)
      (rule top :premises (m n) :sufficiency 1 :conclusion g))"));
    e.assert_evidence("a", {1, 1});
    e.assert_evidence("b", {1, 1});
    CHECK(dominant_rules(e.explain("g")) == std::vector<std::string>{"top", "r1"});
    CHECK(dominant_rules(e.explain("a")).empty());
  }
}

#include "doctest.h"
#include "oracles.hpp"
#include "prk/engine.hpp"

using namespace prk;

namespace {

const char* kPair = R"(
(rule pro :premises (a) :sufficiency 1 :conclusion w)
(rule con :premises ((not b)) :sufficiency 1 :necessity 1 :conclusion w)
(rule other :premises (c) :sufficiency 0.5 :conclusion v)
)";

}  // namespace

TEST_SUITE("conflicts") {
  TEST_CASE("a conflict names its evidence sources") {
    Engine e(parse_kb(kPair));
    e.assert_evidence("a", {0.8, 1});
    e.assert_evidence("b", {0.7, 1});
    e.assert_evidence("c", {0.9, 1});
    auto cs = e.detect_conflicts();
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].wff == "w");
    CHECK(cs[0].lb == doctest::Approx(0.8));
    CHECK(cs[0].lb_negation == doctest::Approx(0.7));
    CHECK(cs[0].suspected_sources == std::vector<std::vector<std::string>>{{"a"}, {"b"}});
    CHECK_FALSE(cs[0].search_truncated);
    CHECK(e.query("w").second == Validity::Inconsistent);
  }

  TEST_CASE("bounds summing to exactly one are not a conflict") {
    Engine e(parse_kb(kPair));
    e.assert_evidence("a", {0.5, 1});
    e.assert_evidence("b", {0.5, 1});
    CHECK(e.detect_conflicts().empty());
  }

  TEST_CASE("the reset policy retracts the suspected inputs") {
    EngineOptions o;
    o.conflict_policy = ConflictPolicy::ResetSources;
    Engine e(parse_kb(kPair), PredicateRegistry::with_builtins(), o);
    e.assert_evidence("a", {0.9, 1});
    e.assert_evidence("b", {0.9, 1});
    e.assert_evidence("c", {0.9, 1});
    auto cs = e.handle_conflicts();
    CHECK(cs.size() == 1);
    CHECK(e.query("a").first == Interval::unknown());
    CHECK(e.query("b").first == Interval::unknown());
    CHECK(e.query("c").first == Interval{0.9, 1});
    CHECK(e.detect_conflicts().empty());
  }

  TEST_CASE("sources agree with exhaustive search on random evidence") {
    KnowledgeBase kb = parse_kb(R"(
      (rule r1 :premises (a b) :sufficiency 0.9 :tnorm T2 :conclusion w)
      (rule r2 :premises ((not c)) :sufficiency 1 :necessity 0.9 :conclusion w)
      (rule r3 :premises (d) :sufficiency 1 :necessity 1 :tnorm T2 :conclusion w))");
    std::mt19937_64 rng(8);
    int conflicts = 0;
    for (int i = 0; i < 300; ++i) {
      Engine e(kb);
      std::map<std::string, Interval> ev;
      for (const char* in : {"a", "b", "c", "d"}) {
        ev[in] = oracle::random_interval(rng, 0.1);
        e.assert_evidence(in, ev[in]);
      }
      auto cs = e.detect_conflicts();
      auto want = oracle::conflict_sources(kb, ev, "w");
      Interval w = oracle::fixpoint(kb, ev).at("w");
      bool expected = w.lb + (1.0 - w.ub) > 1.0 + 1e-12;
      CHECK(cs.empty() == !expected);
      if (!cs.empty()) {
        ++conflicts;
        CHECK(cs[0].suspected_sources == want);
      }
    }
    CHECK(conflicts > 10);
  }
}

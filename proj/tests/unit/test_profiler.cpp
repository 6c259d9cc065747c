#include "doctest.h"
#include "files.hpp"
#include "prk/network_io.hpp"
#include "prk/profiler.hpp"
#include "prk/scenario.hpp"

using namespace prk;

TEST_SUITE("profiler") {
  TEST_CASE("median and nearest-rank percentile") {
    CHECK(median({3, 1, 2}) == 2);
    CHECK(median({4, 1, 3, 2}) == 2.5);
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(percentile(v, 90) == 9);
    CHECK(percentile(v, 100) == 10);
    CHECK(percentile(v, 1) == 1);
    CHECK_THROWS(median({}));
    CHECK_THROWS(percentile({}, 50));
  }

  TEST_CASE("profiles every rule and predicate of the bundled KB") {
    CompiledNetwork net = compile(parse_kb(testfs::slurp(testfs::data("situation.rkb"))));
    Scenario s = parse_scenario(testfs::slurp(testfs::data("scenarios/turn-away.rsc")));
    TrackFile track = run_scenario(s).track;
    ProfileOptions o;
    o.samples = 12;
    o.warmup = 2;
    TimingTable t = profile(net, track, PredicateRegistry::with_builtins(), o, "turn-away");
    CHECK(t.sample_count == 12);
    CHECK(t.entries.size() == net.kb.templates.size() + net.kb.predicates.size());
    for (const auto& [k, e] : t.entries) {
      CAPTURE(e.name);
      CHECK(e.measured);
      CHECK(e.samples == 12);
      CHECK(e.raw.size() == 12);
      CHECK(e.cost_us >= 0.0);
      CHECK(e.cost_us == median(e.raw));
    }
    CHECK(t.cost(CostKind::Rule, "no-such-rule") == t.default_cost_us);
  }

  TEST_CASE("rules that never fire are flagged unmeasured") {
    KnowledgeBase kb = parse_kb(R"(
      (object-type ghost)
      (rule seen :premises (a) :sufficiency 1 :conclusion b)
      (rule unseen :vars ((?g ghost)) :premises ((p ?g)) :sufficiency 1 :conclusion (q ?g)))");
    TrackFile track = read_track("RTF1\n0 - a true 1 1\n");
    TimingTable t = profile(compile(kb), track, PredicateRegistry::with_builtins(), {5, 1});
    CHECK(t.find(CostKind::Rule, "seen")->measured);
    const TimingEntry* u = t.find(CostKind::Rule, "unseen");
    REQUIRE(u);
    CHECK_FALSE(u->measured);
    CHECK(u->cost_us == t.default_cost_us);
    CHECK(t.default_cost_us == t.find(CostKind::Rule, "seen")->cost_us);
  }

  TEST_CASE("timing tables round trip through text") {
    TimingTable t;
    t.track_id = "demo track";
    t.sample_count = 30;
    t.default_cost_us = 2.5;
    t.entries[{CostKind::Rule, "r1"}] = TimingEntry{CostKind::Rule, "r1", 1.25, 30, true, {}};
    t.entries[{CostKind::Predicate, "attr="}] = TimingEntry{CostKind::Predicate, "attr=", 2.5, 0, false, {}};
    std::string text = write_timing(t);
    TimingTable back = read_timing(text);
    CHECK(back.track_id == "demo track");
    CHECK(back.sample_count == 30);
    CHECK(back.cost(CostKind::Rule, "r1") == 1.25);
    CHECK_FALSE(back.find(CostKind::Predicate, "attr=")->measured);
    CHECK(write_timing(back) == text);
    CHECK_THROWS(read_timing("samples 3\n"));
    CHECK_THROWS(read_timing("RKT1\nrule r1 x 3 measured\n"));
  }
}

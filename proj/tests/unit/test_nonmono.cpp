#include <algorithm>

#include "doctest.h"
#include "oracles.hpp"
#include "prk/engine.hpp"
#include "prk/nonmono.hpp"

using namespace prk;

namespace {

// p <- ~[0.5]q (s1), q <- ~[0.5]p (s2), with optional boundary labels.
LoopProblem nixon(double s1, double s2, std::vector<double> p_boundary = {}, std::vector<double> q_boundary = {}) {
  LoopProblem lp;
  lp.wff_ids = {"p", "q"};
  lp.aggregation = {Tnorm::T3, Tnorm::T3};
  lp.boundary_labels = {p_boundary, q_boundary};
  lp.boundary_refutations = {std::vector<double>(p_boundary.size(), 0.0),
                             std::vector<double>(q_boundary.size(), 0.0)};
  LoopPremise nq;
  nq.kind = LoopPremise::Kind::NmMember;
  nq.member = 1;
  nq.alpha = 0.5;
  LoopPremise np = nq;
  np.member = 0;
  lp.rules.push_back(LoopRule{"r1", Tnorm::T3, s1, 0.0, true, {nq}, 0});
  lp.rules.push_back(LoopRule{"r2", Tnorm::T3, s2, 0.0, true, {np}, 1});
  return lp;
}

}  // namespace

TEST_SUITE("nonmono") {
  TEST_CASE("antecedent is a step at alpha") {
    CHECK(nm_antecedent(0.0, 0.5) == 1.0);
    CHECK(nm_antecedent(std::nextafter(0.5, 0.0), 0.5) == 1.0);
    CHECK(nm_antecedent(0.5, 0.5) == 0.0);
    CHECK(nm_antecedent(1.0, 0.5) == 0.0);
    CHECK(nm_antecedent(0.0, 0.0) == 0.0);
  }

  TEST_CASE("loops and monotonic cycles in a dependency graph") {
    DependencyGraph g;
    g.node_count = 5;
    // 0 -> 1 -> 2 -nm-> 1, 3 -> 4
    g.arcs = {{0, 1, false}, {1, 2, false}, {2, 1, true}, {3, 4, false}};
    auto loops = find_loops(g);
    REQUIRE(loops.size() == 1);
    CHECK(loops[0].members == std::vector<std::uint32_t>{1, 2});
    CHECK(loops[0].nm_arcs.size() == 1);
    REQUIRE(loops[0].boundary.size() == 1);
    CHECK(loops[0].boundary[0].from == 0);
    auto order = condensed_topo_order(g, loops);
    CHECK(order == std::vector<std::uint32_t>{0, 1, 2, 3, 4});

    g.arcs[2].nm = false;
    try {
      find_loops(g);
      FAIL("monotonic cycle not detected");
    } catch (const MonotonicCycleError& e) {
      CHECK(e.cycle().front() == e.cycle().back());
      CHECK(e.cycle().size() == 3);
    }
  }

  TEST_CASE("Nixon diamond without support has two extensions") {
    LoopProblem lp = nixon(0.8, 0.8);
    auto ext = enumerate_extensions(lp);
    REQUIRE(ext.size() == 2);
    for (const Extension& e : ext) {
      CHECK(e.score == doctest::Approx(0.8));
      CHECK(e.values[0].lb * e.values[1].lb == 0.0);
    }
    // equal scores: the smaller LB vector over (p, q) wins, i.e. the q extension
    const Extension& best = select_extension(ext, lp);
    CHECK(best.values[0].lb == 0.0);
    CHECK(best.values[1].lb == doctest::Approx(0.8));
  }

  TEST_CASE("boundary support above alpha leaves one extension") {
    auto ext = enumerate_extensions(nixon(0.8, 0.8, {}, {0.9}));
    REQUIRE(ext.size() == 1);
    CHECK(ext[0].values[0].lb == 0.0);
    CHECK(ext[0].values[1].lb == doctest::Approx(0.9));
  }

  TEST_CASE("information content decides between extensions") {
    // boundary 0.3 on p: {p 0.8, q 0} scores 0.8, {p 0.3, q 0.8} scores 1.1
    LoopProblem lp = nixon(0.8, 0.8, {0.3}, {});
    auto ext = enumerate_extensions(lp);
    REQUIRE(ext.size() == 2);
    const Extension& best = select_extension(ext, lp);
    CHECK(best.score == doctest::Approx(1.1));
    CHECK(best.values[0].lb == doctest::Approx(0.3));

    LoopProblem asym = nixon(0.9, 0.5);
    auto e2 = enumerate_extensions(asym);
    REQUIRE(e2.size() == 2);
    CHECK(select_extension(e2, asym).values[0].lb == doctest::Approx(0.9));

    ExtensionPreference prefer_q{[](const Extension& e) { return e.values[1].lb; }};
    CHECK(select_extension(e2, asym, prefer_q).values[1].lb == doctest::Approx(0.5));
  }

  TEST_CASE("odd loop has no extension") {
    LoopProblem lp;
    lp.wff_ids = {"p"};
    lp.aggregation = {Tnorm::T3};
    lp.boundary_labels = {{}};
    lp.boundary_refutations = {{}};
    LoopPremise np;
    np.kind = LoopPremise::Kind::NmMember;
    np.member = 0;
    np.alpha = 0.5;
    lp.rules.push_back(LoopRule{"r", Tnorm::T3, 0.8, 0.0, true, {np}, 0});
    CHECK(enumerate_extensions(lp).empty());
    CHECK_THROWS_AS(select_extension(std::vector<Extension>{}, lp), std::invalid_argument);
  }

  TEST_CASE("antecedent cap") {
    CHECK_THROWS_AS(enumerate_extensions(nixon(0.8, 0.8), 1), LoopTooLargeError);
    CHECK_THROWS_AS(propagate_loop(nixon(0.8, 0.8), {true}), std::invalid_argument);
  }

  TEST_CASE("engine loops agree with the brute-force fixed points") {
    const char* base = R"(
      (rule r1 :nm-premises ((q :alpha 0.5)) :sufficiency 0.8 :conclusion p)
      (rule r2 :nm-premises ((p :alpha 0.5)) :sufficiency 0.8 :conclusion q)
      (rule sp :premises (g) :sufficiency 0.3 :conclusion p)
      (rule down :premises (p q) :sufficiency 1 :conclusion both))";
    KnowledgeBase kb = parse_kb(base);
    Engine e(kb);
    e.assert_evidence("g", {1, 1});
    e.propagate();
    auto reports = e.loop_reports();
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].extensions.size() == 2);
    auto fixed = oracle::nm_fixed_points(kb, {{"g", {1, 1}}});
    CHECK(fixed.size() == 2);
    for (const Extension& x : reports[0].extensions) {
      bool found = std::any_of(fixed.begin(), fixed.end(), [&](const auto& f) {
        for (std::size_t i = 0; i < reports[0].members.size(); ++i) {
          if (std::abs(f.at(reports[0].members[i]).lb - x.values[i].lb) > 1e-12) return false;
        }
        return true;
      });
      CHECK(found);
    }
    CHECK(e.state("p").interval.lb == doctest::Approx(0.3));
    CHECK(e.state("q").interval.lb == doctest::Approx(0.8));
    CHECK(e.state("both").interval.lb == doctest::Approx(0.3));

    e.assert_evidence("g", {0, 1});
    e.propagate();
    CHECK(e.loop_reports()[0].extensions.size() == 2);
  }
}

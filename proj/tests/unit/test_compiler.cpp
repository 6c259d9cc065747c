#include <algorithm>
#include <random>

#include "doctest.h"
#include "files.hpp"
#include "oracles.hpp"
#include "prk/compiler.hpp"
#include "prk/network_io.hpp"

using namespace prk;

namespace {

const char* kChain = R"(
(rule r1 :premises (a (not b)) :sufficiency 0.9 :conclusion c)
(rule r2 :premises (c (test a :lb>= 0.2)) :sufficiency 0.8 :conclusion d)
(rule r3 :premises (d) :nm-premises ((e :alpha 0.5)) :sufficiency 0.4 :conclusion f)
)";

}  // namespace

TEST_SUITE("compiler") {
  TEST_CASE("graph nodes are canonical and bipartite") {
    RuleGraph g = build_graph(parse_kb(kChain));
    std::vector<std::string> keys;
    for (const GraphNode& n : g.nodes) keys.push_back(n.key);
    CHECK(keys == std::vector<std::string>{"a/0=true", "b/0=true", "c/0=true", "d/0=true", "e/0=true",
                                           "f/0=true", "r1", "r2", "r3"});
    CHECK(g.nodes[0].input);
    CHECK_FALSE(g.nodes[2].input);
    CHECK(g.or_nodes().size() == 6);
    CHECK(g.and_nodes().size() == 3);
    CHECK(g.arcs.size() == 9);
    CHECK(std::is_sorted(g.arcs.begin(), g.arcs.end(), [](const GraphArc& a, const GraphArc& b) {
      return std::tie(a.from, a.to) < std::tie(b.from, b.to);
    }));
    auto r3 = *g.find(GraphNodeKind::Rule, "r3");
    auto e = *g.find(GraphNodeKind::Wff, "e/0=true");
    auto nm = std::find_if(g.arcs.begin(), g.arcs.end(), [&](const GraphArc& a) { return a.from == e && a.to == r3; });
    REQUIRE(nm != g.arcs.end());
    CHECK(nm->kind == ArcKind::Nm);
    CHECK(nm->alpha == 0.5);
    CHECK(g.in_degree(*g.find(GraphNodeKind::Rule, "r1")) == 2);
    CHECK_NOTHROW(check_graph(g));
  }

  TEST_CASE("topological order respects every arc") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 30; ++i) {
      RuleGraph g = build_graph(oracle::random_kb(rng).kb);
      std::vector<std::size_t> pos(g.nodes.size());
      for (std::size_t k = 0; k < g.topo_order.size(); ++k) pos[g.topo_order[k]] = k;
      CHECK(g.topo_order.size() == g.nodes.size());
      for (const GraphArc& a : g.arcs) CHECK(pos[a.from] < pos[a.to]);
    }
  }

  TEST_CASE("monotonic cycles are rejected with the cycle path") {
    KnowledgeBase kb = parse_kb(R"(
      (rule r1 :premises (a x) :sufficiency 1 :conclusion b)
      (rule r2 :premises (b) :sufficiency 1 :conclusion c)
      (rule r3 :premises ((not c)) :sufficiency 1 :conclusion a))");
    try {
      build_graph(kb);
      FAIL("cycle not detected");
    } catch (const CycleError& e) {
      const auto& p = e.path();
      REQUIRE(p.size() >= 7);
      CHECK(p.front() == p.back());
      CHECK(std::string(e.what()).find(" -> ") != std::string::npos);
      for (const char* n : {"a", "b", "c", "r1", "r2", "r3"}) CHECK(std::count(p.begin(), p.end(), n) >= 1);
      CHECK(std::count(p.begin(), p.end(), "x") == 0);
    }
  }

  TEST_CASE("a cycle broken by an NM antecedent compiles into a loop") {
    KnowledgeBase kb = parse_kb(R"(
      (rule r1 :nm-premises ((q :alpha 0.5)) :sufficiency 0.8 :conclusion p)
      (rule r2 :nm-premises ((p :alpha 0.5)) :sufficiency 0.8 :conclusion q))");
    RuleGraph g = build_graph(kb);
    REQUIRE(g.nm_loops.size() == 1);
    CHECK(g.nm_loops[0].size() == 4);
  }

  TEST_CASE("arc kinds round trip") {
    for (ArcKind k : {ArcKind::Premise, ArcKind::NegatedPremise, ArcKind::Test, ArcKind::Nm, ArcKind::Conclusion}) {
      CHECK(parse_arc_kind(to_string(k)) == k);
    }
    CHECK_FALSE(parse_arc_kind("bogus").has_value());
  }
}

TEST_SUITE("network") {
  TEST_CASE("sha256 matches the standard test vector") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("emit is deterministic and load inverts it") {
    KnowledgeBase kb = parse_kb(testfs::slurp(testfs::data("situation.rkb")));
    CompiledNetwork net = compile(kb);
    std::string a = emit_network(net.graph, net.kb);
    std::string b = emit_network(compile(parse_kb(testfs::slurp(testfs::data("situation.rkb")))).graph, kb);
    CHECK(a == b);
    CHECK(a.rfind("RKN1\n", 0) == 0);
    CompiledNetwork back = load_network(a);
    CHECK(back.graph == net.graph);
    CHECK(back.kb == net.kb);
    CHECK(back.kb_hash == net.kb_hash);
    CHECK(emit_network(back.graph, back.kb) == a);
  }

  TEST_CASE("damaged files are rejected with the right kind") {
    CompiledNetwork net = compile(parse_kb(kChain));
    std::string text = emit_network(net.graph, net.kb);
    auto kind_of = [](const std::string& s) {
      try {
        load_network(s);
      } catch (const NetworkError& e) {
        return static_cast<int>(e.kind());
      }
      return -1;
    };
    CHECK(kind_of("hello\n") == static_cast<int>(NetworkError::Kind::Format));
    std::string v2 = text;
    v2[3] = '2';
    CHECK(kind_of(v2) == static_cast<int>(NetworkError::Kind::Version));
    CHECK(kind_of(text.substr(0, text.size() / 2)) == static_cast<int>(NetworkError::Kind::Checksum));
    std::string flipped = text;
    flipped[text.find("tnorm T3") + 7] = '2';
    CHECK(kind_of(flipped) == static_cast<int>(NetworkError::Kind::Checksum));
  }

  TEST_CASE("undeclared predicates fail compilation") {
    KnowledgeBase kb = parse_kb("(rule r :premises ((call mystery a)) :sufficiency 1 :conclusion b)");
    CHECK_THROWS_AS(compile(kb), NetworkError);
    KnowledgeBase arity = parse_kb("(predicate p 2)(rule r :premises ((call p a)) :sufficiency 1 :conclusion b)");
    CHECK_THROWS_AS(compile(arity), NetworkError);
  }
}

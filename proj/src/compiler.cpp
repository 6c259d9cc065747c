#include "prk/compiler.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace prk {

std::string_view to_string(ArcKind k) {
  switch (k) {
    case ArcKind::Premise: return "premise";
    case ArcKind::NegatedPremise: return "negated";
    case ArcKind::Test: return "test";
    case ArcKind::Nm: return "nm";
    case ArcKind::Conclusion: return "conclusion";
  }
  return "?";
}

std::optional<ArcKind> parse_arc_kind(std::string_view s) {
  for (ArcKind k : {ArcKind::Premise, ArcKind::NegatedPremise, ArcKind::Test, ArcKind::Nm, ArcKind::Conclusion}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> RuleGraph::find(GraphNodeKind kind, const std::string& key) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), std::tie(kind, key), [](const GraphNode& n, const auto& k) {
    return std::tie(n.kind, n.key) < k;
  });
  if (it == nodes.end() || it->kind != kind || it->key != key) return std::nullopt;
  return static_cast<std::uint32_t>(it - nodes.begin());
}

std::vector<std::uint32_t> RuleGraph::or_nodes() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind == GraphNodeKind::Wff) out.push_back(i);
  }
  return out;
}

std::vector<std::uint32_t> RuleGraph::and_nodes() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind == GraphNodeKind::Rule) out.push_back(i);
  }
  return out;
}

std::size_t RuleGraph::in_degree(std::uint32_t n) const {
  return static_cast<std::size_t>(std::count_if(arcs.begin(), arcs.end(), [&](const GraphArc& a) { return a.to == n; }));
}

DependencyGraph RuleGraph::dependencies() const {
  DependencyGraph d;
  d.node_count = nodes.size();
  for (const GraphArc& a : arcs) d.arcs.push_back({a.from, a.to, a.kind == ArcKind::Nm});
  return d;
}

std::string format_cycle(const std::vector<std::string>& path) {
  std::string s;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) s += " -> ";
    s += path[i];
  }
  return s;
}

CycleError::CycleError(std::vector<std::string> path)
    : std::runtime_error("monotonic cycle: " + format_cycle(path)), path_(std::move(path)) {}

namespace {

// Display name for a signature: `A` for `A/0=true`.
std::string display(const GraphNode& n) {
  if (n.kind == GraphNodeKind::Rule) return n.key;
  auto slash = n.key.rfind('/');
  auto eq = n.key.find('=', slash);
  std::string var = n.key.substr(0, slash);
  std::string arity = n.key.substr(slash + 1, eq - slash - 1);
  std::string value = n.key.substr(eq + 1);
  std::string s = var;
  if (arity != "0") s += "/" + arity;
  if (value != "true") s += "=" + value;
  return s;
}

}  // namespace

RuleGraph build_graph(const KnowledgeBase& kb) {
  std::set<std::string> signatures;
  for (const RuleTemplate& t : kb.templates) {
    for (const Premise& p : t.premises) {
      if (p.kind != PremiseKind::Call) signatures.insert(p.wff.signature());
    }
    for (const NmPremise& p : t.nm_premises) signatures.insert(p.wff.signature());
    signatures.insert(t.conclusion.signature());
  }
  for (const WffPattern& p : kb.declared_inputs) signatures.insert(p.signature());

  RuleGraph g;
  for (const std::string& s : signatures) g.nodes.push_back({GraphNodeKind::Wff, s, !kb.concludes(s)});
  std::vector<const RuleTemplate*> rules;
  for (const RuleTemplate& t : kb.templates) rules.push_back(&t);
  std::sort(rules.begin(), rules.end(), [](auto* a, auto* b) { return a->name < b->name; });
  for (const RuleTemplate* t : rules) g.nodes.push_back({GraphNodeKind::Rule, t->name, false});

  for (const RuleTemplate* t : rules) {
    std::uint32_t r = *g.find(GraphNodeKind::Rule, t->name);
    for (const Premise& p : t->premises) {
      if (p.kind == PremiseKind::Call) continue;
      ArcKind k = p.kind == PremiseKind::NegatedWff ? ArcKind::NegatedPremise
                  : p.kind == PremiseKind::Test     ? ArcKind::Test
                                                    : ArcKind::Premise;
      g.arcs.push_back({*g.find(GraphNodeKind::Wff, p.wff.signature()), r, k, 0.0});
    }
    for (const NmPremise& p : t->nm_premises) {
      g.arcs.push_back({*g.find(GraphNodeKind::Wff, p.wff.signature()), r, ArcKind::Nm, p.alpha});
    }
    g.arcs.push_back({r, *g.find(GraphNodeKind::Wff, t->conclusion.signature()), ArcKind::Conclusion, 0.0});
  }
  std::sort(g.arcs.begin(), g.arcs.end(), [](const GraphArc& a, const GraphArc& b) {
    return std::tie(a.from, a.to, a.kind, a.alpha) < std::tie(b.from, b.to, b.kind, b.alpha);
  });

  DependencyGraph deps = g.dependencies();
  std::vector<NmLoop> loops;
  try {
    loops = find_loops(deps);
  } catch (const MonotonicCycleError& e) {
    std::vector<std::string> path;
    for (std::uint32_t n : e.cycle()) path.push_back(display(g.nodes[n]));
    throw CycleError(std::move(path));
  }
  for (const NmLoop& l : loops) g.nm_loops.push_back(l.members);
  g.topo_order = condensed_topo_order(deps, loops);
  return g;
}

void check_graph(const RuleGraph& g) {
  auto fail = [](const std::string& m) { throw std::runtime_error("network invariant violated: " + m); };
  std::vector<int> conclusions(g.nodes.size(), 0);
  for (const GraphArc& a : g.arcs) {
    if (a.from >= g.nodes.size() || a.to >= g.nodes.size()) fail("arc endpoint out of range");
    const GraphNode& from = g.nodes[a.from];
    const GraphNode& to = g.nodes[a.to];
    if (a.kind == ArcKind::Conclusion) {
      if (from.kind != GraphNodeKind::Rule || to.kind != GraphNodeKind::Wff) fail("conclusion arc must go rule -> wff");
      ++conclusions[a.from];
    } else if (from.kind != GraphNodeKind::Wff || to.kind != GraphNodeKind::Rule) {
      fail("premise arc must go wff -> rule");
    }
  }
  for (std::uint32_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].kind == GraphNodeKind::Rule && conclusions[i] != 1) fail("rule " + g.nodes[i].key + " needs one conclusion");
  }
  if (g.topo_order.size() != g.nodes.size()) fail("topological order has the wrong length");
  std::vector<std::size_t> pos(g.nodes.size(), SIZE_MAX);
  for (std::size_t i = 0; i < g.topo_order.size(); ++i) {
    if (g.topo_order[i] >= g.nodes.size() || pos[g.topo_order[i]] != SIZE_MAX) fail("topological order is not a permutation");
    pos[g.topo_order[i]] = i;
  }
  std::vector<int> loop_of(g.nodes.size(), -1);
  for (std::size_t l = 0; l < g.nm_loops.size(); ++l) {
    for (std::uint32_t m : g.nm_loops[l]) loop_of[m] = static_cast<int>(l);
  }
  for (const GraphArc& a : g.arcs) {
    bool same_loop = loop_of[a.from] >= 0 && loop_of[a.from] == loop_of[a.to];
    if (!same_loop && pos[a.from] >= pos[a.to]) fail("arc goes backwards in topological order");
  }
}

}  // namespace prk

#include "prk/nonmono.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace prk {

namespace {

std::string describe_cycle(const std::vector<std::uint32_t>& c) {
  std::string s = "monotonic cycle:";
  for (std::uint32_t n : c) s += " " + std::to_string(n);
  return s;
}

struct Adjacency {
  std::vector<std::vector<std::uint32_t>> out;  // arc indices
};

Adjacency adjacency(const DependencyGraph& g, bool monotonic_only) {
  Adjacency a;
  a.out.resize(g.node_count);
  for (std::uint32_t i = 0; i < g.arcs.size(); ++i) {
    const auto& arc = g.arcs[i];
    if (monotonic_only && arc.nm) continue;
    a.out[arc.from].push_back(i);
  }
  for (auto& v : a.out) {
    std::sort(v.begin(), v.end(), [&](std::uint32_t x, std::uint32_t y) {
      return g.arcs[x].to != g.arcs[y].to ? g.arcs[x].to < g.arcs[y].to : x < y;
    });
  }
  return a;
}

// Iterative DFS; returns the first cycle found over the given adjacency.
std::vector<std::uint32_t> find_cycle(const DependencyGraph& g, const Adjacency& adj) {
  enum : std::uint8_t { White, Grey, Black };
  std::vector<std::uint8_t> color(g.node_count, White);
  std::vector<std::uint32_t> parent(g.node_count, 0);
  struct Frame {
    std::uint32_t node;
    std::size_t next;
  };
  for (std::uint32_t root = 0; root < g.node_count; ++root) {
    if (color[root] != White) continue;
    std::vector<Frame> stack{{root, 0}};
    color[root] = Grey;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next == adj.out[f.node].size()) {
        color[f.node] = Black;
        stack.pop_back();
        continue;
      }
      std::uint32_t to = g.arcs[adj.out[f.node][f.next++]].to;
      if (color[to] == Grey) {
        std::vector<std::uint32_t> cycle{to};
        for (std::uint32_t n = f.node; n != to; n = parent[n]) cycle.push_back(n);
        std::reverse(cycle.begin() + 1, cycle.end());
        cycle.push_back(to);
        return cycle;
      }
      if (color[to] == White) {
        color[to] = Grey;
        parent[to] = f.node;
        stack.push_back({to, 0});
      }
    }
  }
  return {};
}

// Tarjan's algorithm, iterative.  Component ids are assigned in reverse
// topological order of the condensation.
std::vector<std::uint32_t> strongly_connected(const DependencyGraph& g, const Adjacency& adj,
                                              std::uint32_t& count) {
  constexpr std::uint32_t kUnset = UINT32_MAX;
  std::vector<std::uint32_t> index(g.node_count, kUnset), low(g.node_count, 0), comp(g.node_count, kUnset);
  std::vector<bool> on_stack(g.node_count, false);
  std::vector<std::uint32_t> stack;
  std::uint32_t next_index = 0;
  count = 0;
  struct Frame {
    std::uint32_t node;
    std::size_t next;
  };
  for (std::uint32_t root = 0; root < g.node_count; ++root) {
    if (index[root] != kUnset) continue;
    std::vector<Frame> calls{{root, 0}};
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!calls.empty()) {
      Frame& f = calls.back();
      std::uint32_t v = f.node;
      if (f.next < adj.out[v].size()) {
        std::uint32_t w = g.arcs[adj.out[v][f.next++]].to;
        if (index[w] == kUnset) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          calls.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        while (true) {
          std::uint32_t w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
          if (w == v) break;
        }
        ++count;
      }
      calls.pop_back();
      if (!calls.empty()) {
        std::uint32_t u = calls.back().node;
        low[u] = std::min(low[u], low[v]);
      }
    }
  }
  return comp;
}

}  // namespace

MonotonicCycleError::MonotonicCycleError(std::vector<std::uint32_t> cycle)
    : std::runtime_error(describe_cycle(cycle)), cycle_(std::move(cycle)) {}

std::vector<NmLoop> find_loops(const DependencyGraph& g) {
  auto cycle = find_cycle(g, adjacency(g, true));
  if (!cycle.empty()) throw MonotonicCycleError(std::move(cycle));

  Adjacency adj = adjacency(g, false);
  std::uint32_t count = 0;
  auto comp = strongly_connected(g, adj, count);
  std::vector<std::vector<std::uint32_t>> members(count);
  for (std::uint32_t n = 0; n < g.node_count; ++n) members[comp[n]].push_back(n);

  std::vector<NmLoop> loops;
  std::vector<int> loop_of(count, -1);
  for (std::uint32_t c = 0; c < count; ++c) {
    if (members[c].size() < 2) continue;
    loop_of[c] = static_cast<int>(loops.size());
    loops.push_back(NmLoop{members[c], {}, {}});
  }
  // Self-loops through an NM arc form single-node loops.
  for (const auto& arc : g.arcs) {
    if (arc.from == arc.to && loop_of[comp[arc.from]] < 0) {
      loop_of[comp[arc.from]] = static_cast<int>(loops.size());
      loops.push_back(NmLoop{{arc.from}, {}, {}});
    }
  }
  for (const auto& arc : g.arcs) {
    int li = loop_of[comp[arc.to]];
    if (li < 0) continue;
    if (comp[arc.from] == comp[arc.to]) {
      if (arc.nm) loops[li].nm_arcs.push_back(arc);
    } else {
      loops[li].boundary.push_back(arc);
    }
  }
  std::sort(loops.begin(), loops.end(),
            [](const NmLoop& a, const NmLoop& b) { return a.members.front() < b.members.front(); });
  return loops;
}

std::vector<std::uint32_t> condensed_topo_order(const DependencyGraph& g, const std::vector<NmLoop>& loops) {
  // Unit = loop index or the node itself; a unit is represented by its smallest node.
  std::vector<std::uint32_t> unit(g.node_count);
  std::iota(unit.begin(), unit.end(), 0u);
  for (const NmLoop& l : loops) {
    for (std::uint32_t m : l.members) unit[m] = l.members.front();
  }
  std::vector<std::uint32_t> indegree(g.node_count, 0);
  std::vector<std::vector<std::uint32_t>> succ(g.node_count);
  for (const auto& arc : g.arcs) {
    std::uint32_t a = unit[arc.from], b = unit[arc.to];
    if (a == b) continue;
    succ[a].push_back(b);
    ++indegree[b];
  }
  std::vector<std::vector<std::uint32_t>> members_of(g.node_count);
  for (std::uint32_t n = 0; n < g.node_count; ++n) members_of[unit[n]].push_back(n);

  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
  for (std::uint32_t n = 0; n < g.node_count; ++n) {
    if (unit[n] == n && indegree[n] == 0) ready.push(n);
  }
  std::vector<std::uint32_t> order;
  order.reserve(g.node_count);
  while (!ready.empty()) {
    std::uint32_t u = ready.top();
    ready.pop();
    for (std::uint32_t m : members_of[u]) order.push_back(m);
    for (std::uint32_t v : succ[u]) {
      if (--indegree[v] == 0) ready.push(v);
    }
  }
  if (order.size() != g.node_count) throw std::logic_error("condensed graph is cyclic");
  return order;
}

std::size_t LoopProblem::nm_antecedent_count() const {
  std::size_t k = 0;
  for (const LoopRule& r : rules) {
    for (const LoopPremise& p : r.premises) k += p.kind == LoopPremise::Kind::NmMember;
  }
  return k;
}

namespace {

double test_value(TestKind k, double threshold, Interval v) {
  switch (k) {
    case TestKind::LbAtLeast: return v.lb >= threshold ? 1.0 : 0.0;
    case TestKind::UbAtMost: return v.ub <= threshold ? 1.0 : 0.0;
    case TestKind::IgnoranceBelow: return v.ignorance() < threshold ? 1.0 : 0.0;
  }
  return 0.0;
}

// Evaluation order of the monotonic part of a loop: entries >= 0 are rules,
// entries < 0 are members encoded as ~index.
std::vector<long> loop_order(const LoopProblem& loop) {
  std::size_t m = loop.wff_ids.size(), r = loop.rules.size();
  std::vector<std::vector<std::size_t>> succ(m + r);
  std::vector<std::size_t> indegree(m + r, 0);
  for (std::size_t i = 0; i < r; ++i) {
    for (const LoopPremise& p : loop.rules[i].premises) {
      if (p.kind == LoopPremise::Kind::Fixed || p.kind == LoopPremise::Kind::NmMember) continue;
      succ[p.member].push_back(m + i);
      ++indegree[m + i];
    }
    succ[m + i].push_back(loop.rules[i].conclusion);
    ++indegree[loop.rules[i].conclusion];
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t n = 0; n < m + r; ++n) {
    if (indegree[n] == 0) ready.push(n);
  }
  std::vector<long> order;
  while (!ready.empty()) {
    std::size_t n = ready.top();
    ready.pop();
    order.push_back(n < m ? ~static_cast<long>(n) : static_cast<long>(n - m));
    for (std::size_t s : succ[n]) {
      if (--indegree[s] == 0) ready.push(s);
    }
  }
  if (order.size() != m + r) throw std::logic_error("monotonic cycle inside a non-monotonic loop");
  return order;
}

}  // namespace

Extension propagate_loop(const LoopProblem& loop, const std::vector<bool>& assumptions) {
  std::size_t m = loop.wff_ids.size();
  Extension e;
  e.values.assign(m, Interval::unknown());
  e.rule_labels.assign(loop.rules.size(), 0.0);
  e.rule_refutations.assign(loop.rules.size(), 0.0);
  e.assumptions = assumptions;

  std::vector<std::size_t> nm_index(loop.rules.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < loop.rules.size(); ++i) {
    nm_index[i] = k;
    for (const LoopPremise& p : loop.rules[i].premises) k += p.kind == LoopPremise::Kind::NmMember;
  }
  if (assumptions.size() != k) throw std::invalid_argument("assumption vector has the wrong length");

  std::vector<std::vector<double>> labels(m), refs(m);
  for (std::size_t w = 0; w < m; ++w) {
    if (w < loop.boundary_labels.size()) labels[w] = loop.boundary_labels[w];
    if (w < loop.boundary_refutations.size()) refs[w] = loop.boundary_refutations[w];
  }

  for (long step : loop_order(loop)) {
    if (step < 0) {
      std::size_t w = static_cast<std::size_t>(~step);
      double lb = tconorm_n(loop.aggregation[w], labels[w]);
      double ub = 1.0 - tconorm_n(loop.aggregation[w], refs[w]);
      e.values[w] = Interval{lb, ub};
      continue;
    }
    std::size_t ri = static_cast<std::size_t>(step);
    const LoopRule& rule = loop.rules[ri];
    double label = 0.0, refutation = 0.0;
    if (rule.applicable) {
      std::vector<double> lbs{rule.sufficiency}, rfs{rule.necessity};
      std::size_t nm = nm_index[ri];
      for (const LoopPremise& p : rule.premises) {
        double lb = 0.0, rf = 0.0;
        switch (p.kind) {
          case LoopPremise::Kind::Fixed:
            lb = p.fixed.lb;
            rf = 1.0 - p.fixed.ub;
            break;
          case LoopPremise::Kind::Member:
            lb = e.values[p.member].lb;
            rf = 1.0 - e.values[p.member].ub;
            break;
          case LoopPremise::Kind::NegatedMember:
            lb = 1.0 - e.values[p.member].ub;
            rf = e.values[p.member].lb;
            break;
          case LoopPremise::Kind::TestMember:
            lb = test_value(p.test, p.threshold, e.values[p.member]);
            rf = 1.0 - lb;
            break;
          case LoopPremise::Kind::NmMember:
            lb = assumptions[nm++] ? 1.0 : 0.0;
            rf = 1.0 - lb;
            break;
        }
        lbs.push_back(lb);
        rfs.push_back(rf);
      }
      label = tnorm_n(rule.family, lbs);
      refutation = rule.necessity == 0.0 ? 0.0 : tnorm_n(rule.family, rfs);
    }
    e.rule_labels[ri] = label;
    e.rule_refutations[ri] = refutation;
    labels[rule.conclusion].push_back(label);
    refs[rule.conclusion].push_back(refutation);
  }
  e.score = information_content(e.values);
  return e;
}

std::vector<Extension> enumerate_extensions(const LoopProblem& loop, std::size_t cap) {
  std::size_t k = loop.nm_antecedent_count();
  if (k > cap) {
    throw LoopTooLargeError("non-monotonic loop has " + std::to_string(k) + " antecedents (cap " +
                            std::to_string(cap) + "); split the loop or reduce its non-monotonic premises");
  }
  std::vector<Extension> out;
  std::vector<bool> assumptions(k);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << k); ++bits) {
    // Bit 0 is the last antecedent so the outer order is lexicographic.
    for (std::size_t i = 0; i < k; ++i) assumptions[i] = (bits >> (k - 1 - i)) & 1u;
    Extension e = propagate_loop(loop, assumptions);
    bool consistent = true;
    std::size_t idx = 0;
    for (const LoopRule& r : loop.rules) {
      for (const LoopPremise& p : r.premises) {
        if (p.kind != LoopPremise::Kind::NmMember) continue;
        bool holds = nm_antecedent(e.values[p.member].lb, p.alpha) == 1.0;
        consistent = consistent && holds == assumptions[idx];
        ++idx;
      }
    }
    if (!consistent) continue;
    bool duplicate = std::any_of(out.begin(), out.end(), [&](const Extension& o) { return o.values == e.values; });
    if (!duplicate) out.push_back(std::move(e));
  }
  return out;
}

double information_content(std::span<const Interval> values) {
  double s = 0.0;
  for (const Interval& v : values) s += v.lb + (1.0 - v.ub);
  return s;
}

const Extension& select_extension(std::span<const Extension> extensions, const LoopProblem& loop,
                                  const ExtensionPreference& preference) {
  if (extensions.empty()) throw std::invalid_argument("no extension to select");
  auto score = [&](const Extension& e) { return preference.score ? preference.score(e) : e.score; };
  std::vector<std::size_t> by_id(loop.wff_ids.size());
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return loop.wff_ids[a] < loop.wff_ids[b]; });
  auto lex_less = [&](const Extension& a, const Extension& b) {
    for (std::size_t i : by_id) {
      if (a.values[i].lb != b.values[i].lb) return a.values[i].lb < b.values[i].lb;
    }
    return false;
  };
  constexpr double kTie = 1e-12;
  std::size_t best = 0;
  double best_score = score(extensions[0]);
  for (std::size_t i = 1; i < extensions.size(); ++i) {
    double s = score(extensions[i]);
    if (s > best_score + kTie || (std::abs(s - best_score) <= kTie && lex_less(extensions[i], extensions[best]))) {
      best = i;
      best_score = s;
    }
  }
  return extensions[best];
}

}  // namespace prk

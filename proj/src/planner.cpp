#include "prk/planner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace prk {

namespace {

constexpr double kScoreTie = 1e-9;

double path_score(const PlanProblem& p, PlanMode mode, std::size_t i) {
  return mode == PlanMode::Coverage ? 1.0 : (i < p.certainty.size() ? p.certainty[i] : 0.0);
}

bool better(double score, const std::vector<std::size_t>& sel, double best_score, const std::vector<std::size_t>& best) {
  if (score > best_score + kScoreTie) return true;
  if (score < best_score - kScoreTie) return false;
  return sel < best;
}

PlanSelection exact_selection(const PlanProblem& p, PlanMode mode) {
  const std::size_t n = p.paths.size();
  std::vector<int> uses(p.unit_costs.size(), 0);
  std::vector<std::size_t> current;
  PlanSelection best;
  double best_score = -1.0;
  double cost = 0.0, score = 0.0;

  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      if (!current.empty() && better(score, current, best_score, best.selected)) {
        best.selected = current;
        best.cost = cost;
        best_score = score;
      }
      return;
    }
    // Include first so equal-score subsets are reached in lexicographic order.
    double added = 0.0;
    for (std::size_t u : p.paths[i]) {
      if (uses[u]++ == 0) added += p.unit_costs[u];
    }
    if (cost + added <= p.budget + 1e-9) {
      cost += added;
      score += path_score(p, mode, i);
      current.push_back(i);
      self(self, i + 1);
      current.pop_back();
      score -= path_score(p, mode, i);
      cost -= added;
    }
    for (std::size_t u : p.paths[i]) --uses[u];
    self(self, i + 1);
  };
  rec(rec, 0);
  best.score = std::max(best_score, 0.0);
  return best;
}

PlanSelection greedy_selection(const PlanProblem& p, PlanMode mode) {
  PlanSelection sel;
  sel.exact = false;
  std::vector<bool> taken(p.paths.size(), false), paid(p.unit_costs.size(), false);
  while (true) {
    std::size_t best = SIZE_MAX;
    double best_ratio = -1.0, best_cost = 0.0;
    for (std::size_t i = 0; i < p.paths.size(); ++i) {
      if (taken[i]) continue;
      double marginal = 0.0;
      std::vector<std::size_t> units = p.paths[i];
      std::sort(units.begin(), units.end());
      units.erase(std::unique(units.begin(), units.end()), units.end());
      for (std::size_t u : units) {
        if (!paid[u]) marginal += p.unit_costs[u];
      }
      if (sel.cost + marginal > p.budget + 1e-9) continue;
      double gain = path_score(p, mode, i);
      double ratio = marginal <= 0.0 ? INFINITY : gain / marginal;
      if (ratio > best_ratio) {
        best = i;
        best_ratio = ratio;
        best_cost = marginal;
      }
    }
    if (best == SIZE_MAX) break;
    taken[best] = true;
    for (std::size_t u : p.paths[best]) paid[u] = true;
    sel.cost += best_cost;
    sel.score += path_score(p, mode, best);
    sel.selected.push_back(best);
  }
  std::sort(sel.selected.begin(), sel.selected.end());
  return sel;
}

}  // namespace

double selection_cost(const PlanProblem& p, const std::vector<std::size_t>& paths) {
  std::vector<bool> paid(p.unit_costs.size(), false);
  double c = 0.0;
  for (std::size_t i : paths) {
    for (std::size_t u : p.paths[i]) {
      if (!paid[u]) {
        paid[u] = true;
        c += p.unit_costs[u];
      }
    }
  }
  return c;
}

PlanSelection select_paths(const PlanProblem& p, PlanMode mode) {
  if (p.paths.empty()) return {};
  PlanSelection sel = p.paths.size() <= kExactPathLimit ? exact_selection(p, mode) : greedy_selection(p, mode);
  if (!sel.selected.empty()) return sel;
  std::size_t cheapest = 0;
  double cheapest_cost = INFINITY;
  for (std::size_t i = 0; i < p.paths.size(); ++i) {
    double c = selection_cost(p, {i});
    if (c < cheapest_cost) {
      cheapest = i;
      cheapest_cost = c;
    }
  }
  PlanSelection d;
  d.selected = {cheapest};
  d.cost = cheapest_cost;
  d.score = path_score(p, mode, cheapest);
  d.degraded = true;
  d.exact = sel.exact;
  return d;
}

std::string PathPlan::summary() const {
  std::ostringstream os;
  os << "paths=" << selected.size() << "/" << paths.size() << " cost=" << format_number(estimated_cost)
     << " budget=" << format_number(budget);
  if (degraded) os << " degraded";
  if (truncated) os << " truncated";
  return os.str();
}

PathPlan plan(const Engine& engine, NodeId goal, double budget_us, const TimingTable& timing,
              const PlanOptions& options) {
  if (!(budget_us > 0.0)) throw std::invalid_argument("planning budget must be positive");
  if (engine.kind(goal) != NodeKind::Wff) throw std::invalid_argument("plan goal must be a wff");
  PathPlan out;
  out.goal = engine.node_id(goal);
  out.budget = budget_us;

  std::map<std::string, std::size_t> unit_index;
  std::vector<NodeId> unit_node;  // SIZE_MAX-like sentinel for calls
  const NodeId kNoNode = static_cast<NodeId>(-1);
  auto unit = [&](const std::string& name, double cost, NodeId node) {
    auto [it, fresh] = unit_index.emplace(name, out.unit_names.size());
    if (fresh) {
      out.unit_names.push_back(name);
      out.unit_costs.push_back(cost);
      unit_node.push_back(node);
    }
    return it->second;
  };
  auto in_scope = [&](NodeId j) {
    return !options.scope || options.scope->count(engine.justification(j).rule->name) > 0;
  };
  // Units that executing justification (or loop) `j` requires; empty when clean.
  auto units_for = [&](NodeId j, std::vector<std::size_t>& out_units) {
    NodeId u = engine.unit_of(j);
    if (!engine.dirty(u)) return;
    std::vector<NodeId> rules;
    if (engine.loop_of(u) >= 0) {
      for (NodeId m : engine.loop_nodes(engine.loop_of(u))) {
        if (engine.kind(m) == NodeKind::Justification) rules.push_back(m);
      }
    } else {
      rules.push_back(u);
    }
    double cost = 0.0;
    for (NodeId r : rules) cost += timing.cost(CostKind::Rule, engine.justification(r).rule->name);
    out_units.push_back(unit(engine.node_id(u), cost, u));
    for (NodeId r : rules) {
      const JustificationInfo& info = engine.justification(r);
      for (std::size_t k = 0; k < info.predicates.size(); ++k) {
        out_units.push_back(unit("call " + info.call_keys[k], timing.cost(CostKind::Predicate, info.predicates[k]),
                                 kNoNode));
      }
    }
  };

  struct Frame {
    std::vector<NodeId> nodes;
    std::vector<std::size_t> units;
    double bound;
  };
  auto emit = [&](Frame f) {
    if (out.paths.size() >= options.max_paths) {
      out.truncated = true;
      return;
    }
    std::sort(f.units.begin(), f.units.end());
    f.units.erase(std::unique(f.units.begin(), f.units.end()), f.units.end());
    out.paths.push_back(ProofPath{std::move(f.nodes), std::move(f.units), f.bound});
  };
  // Depth-first from the goal.  A wff is a leaf when it is an input, has no
  // in-scope justification, or belongs to a loop (the loop is one unit).
  auto rec = [&](auto&& self, NodeId w, Frame f, bool loop_entry) -> void {
    if (out.truncated) return;
    f.nodes.push_back(w);
    std::vector<NodeId> js;
    if (!loop_entry) {
      for (NodeId j : engine.parents(w)) {
        if (in_scope(j)) js.push_back(j);
      }
    }
    if (js.empty()) {
      if (f.nodes.size() > 1) emit(std::move(f));
      return;
    }
    for (NodeId j : js) {
      Frame g = f;
      g.nodes.push_back(j);
      g.bound = std::min(g.bound, engine.justification(j).rule->sufficiency);
      units_for(j, g.units);
      bool into_loop = engine.loop_of(j) >= 0;
      std::vector<NodeId> premises;
      for (NodeId p : engine.parents(j)) {
        if (!into_loop || engine.loop_of(p) != engine.loop_of(j)) premises.push_back(p);
      }
      if (into_loop) {
        // The loop's boundary premises continue the chain.
        premises.clear();
        for (NodeId m : engine.loop_nodes(engine.loop_of(j))) {
          for (NodeId p : engine.parents(m)) {
            if (engine.loop_of(p) != engine.loop_of(j) && engine.kind(p) == NodeKind::Wff) premises.push_back(p);
          }
        }
        std::sort(premises.begin(), premises.end());
        premises.erase(std::unique(premises.begin(), premises.end()), premises.end());
      }
      if (premises.empty()) {
        emit(std::move(g));
        continue;
      }
      for (NodeId p : premises) self(self, p, g, false);
    }
  };
  bool goal_in_loop = engine.loop_of(goal) >= 0;
  if (goal_in_loop) {
    // The goal's loop is executed as a whole; rules inside it are one unit.
    Frame f{{goal}, {}, 1.0};
    NodeId any_rule = goal;
    for (NodeId m : engine.loop_nodes(engine.loop_of(goal))) {
      if (engine.kind(m) == NodeKind::Justification) any_rule = m;
    }
    if (any_rule != goal) {
      if (in_scope(any_rule)) {
        f.nodes.push_back(any_rule);
        units_for(any_rule, f.units);
        std::vector<NodeId> premises;
        for (NodeId m : engine.loop_nodes(engine.loop_of(goal))) {
          for (NodeId p : engine.parents(m)) {
            if (engine.loop_of(p) != engine.loop_of(goal) && engine.kind(p) == NodeKind::Wff) premises.push_back(p);
          }
        }
        std::sort(premises.begin(), premises.end());
        premises.erase(std::unique(premises.begin(), premises.end()), premises.end());
        if (premises.empty()) {
          emit(f);
        } else {
          for (NodeId p : premises) rec(rec, p, f, false);
        }
      }
    }
  } else {
    rec(rec, goal, Frame{{}, {}, 1.0}, false);
  }

  PlanProblem problem{out.unit_costs, {}, {}, budget_us};
  for (const ProofPath& p : out.paths) {
    problem.paths.push_back(p.units);
    problem.certainty.push_back(p.certainty_bound);
  }
  PlanSelection sel = select_paths(problem, options.mode);
  out.selected = sel.selected;
  out.estimated_cost = sel.cost;
  out.degraded = sel.degraded;
  out.exact = sel.exact;
  if (sel.degraded) {
    out.warning = "budget overrun: cheapest path costs " + format_number(sel.cost) + " us, budget " +
                  format_number(budget_us) + " us";
  }
  for (std::size_t i : out.selected) {
    for (std::size_t u : out.paths[i].units) {
      if (unit_node[u] != kNoNode) out.fired.insert(unit_node[u]);
    }
  }
  return out;
}

}  // namespace prk

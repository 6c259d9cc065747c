#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "criteria.hpp"
#include "oracles.hpp"
#include "prk/executive.hpp"
#include "prk/planner.hpp"

namespace acceptance {

using prk::Engine;
using prk::NodeId;
using prk::Task;
using prk::TaskResult;
using prk::TaskStatus;

namespace {

prk::TimingTable random_costs(const prk::KnowledgeBase& kb, std::mt19937_64& rng) {
  prk::TimingTable t;
  t.default_cost_us = 1.0;
  for (const auto& r : kb.templates) {
    double c = static_cast<double>(1 + rng() % 20);
    t.entries[{prk::CostKind::Rule, r.name}] = prk::TimingEntry{prk::CostKind::Rule, r.name, c, 1, true, {}};
  }
  return t;
}

double union_cost(const prk::PathPlan& p, const std::vector<std::size_t>& selected) {
  std::set<std::size_t> units;
  for (std::size_t i : selected) units.insert(p.paths[i].units.begin(), p.paths[i].units.end());
  double c = 0.0;
  for (std::size_t u : units) c += p.unit_costs[u];
  return c;
}

/// Consecutive path nodes are child/parent in the engine graph, goal first.
bool path_is_chain(const Engine& e, const prk::ProofPath& path, NodeId goal) {
  if (path.nodes.empty() || path.nodes.front() != goal) return false;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    const auto& ps = e.parents(path.nodes[i]);
    bool linked = std::find(ps.begin(), ps.end(), path.nodes[i + 1]) != ps.end();
    bool loop_hop = e.loop_of(path.nodes[i]) >= 0 || e.loop_of(path.nodes[i + 1]) >= 0;
    if (!linked && !loop_hop) return false;
  }
  return true;
}

}  // namespace

Outcome planner_optimality() {
  Stopwatch clock;
  Tally t;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int cones = 0, degraded = 0, attempts = 0;
  std::size_t max_paths = 0;
  while (cones < 100 && attempts < 100000) {
    ++attempts;
    oracle::RandomKb r = oracle::random_kb(rng);
    if (r.derived.empty()) continue;
    Engine e(r.kb);
    for (const std::string& in : r.inputs) e.assert_evidence(in, oracle::random_interval(rng));
    NodeId goal = *e.find(r.derived[rng() % r.derived.size()]);
    prk::TimingTable timing = random_costs(r.kb, rng);
    prk::PathPlan everything = prk::plan(e, goal, 1e15, timing);
    if (everything.paths.empty() || everything.paths.size() > 12) continue;
    ++cones;
    max_paths = std::max(max_paths, everything.paths.size());
    double total = 0.0;
    for (double c : everything.unit_costs) total += c;
    double budget = std::max(0.5, std::round(u(rng) * total));

    for (prk::PlanMode mode : {prk::PlanMode::Coverage, prk::PlanMode::Certainty}) {
      prk::PlanOptions opts;
      opts.mode = mode;
      prk::PathPlan p = prk::plan(e, goal, budget, timing, opts);
      prk::PlanProblem problem;
      problem.unit_costs = p.unit_costs;
      problem.budget = budget;
      for (const prk::ProofPath& path : p.paths) {
        problem.paths.push_back(path.units);
        problem.certainty.push_back(path.certainty_bound);
      }
      const char* m = mode == prk::PlanMode::Coverage ? "coverage" : "certainty";
      auto where = [&] { return cat("cone ", cones, " ", m, " paths=", p.paths.size(), " budget=", budget); };
      for (const prk::ProofPath& path : p.paths) {
        t.expect(path_is_chain(e, path, goal), [&] { return where() + " path is not a chain"; });
      }
      oracle::BruteForcePlan best = oracle::brute_force_plan(problem, mode);
      if (best.selected.empty()) {
        ++degraded;
        t.expect(p.degraded, [&] { return where() + " should be degraded"; });
        continue;
      }
      t.expect(!p.degraded, [&] { return where() + " degraded although a path fits"; });
      if (mode == prk::PlanMode::Coverage) {
        t.expect(p.selected.size() == best.selected.size(),
                 [&] { return where() + cat(" coverage ", p.selected.size(), " brute force ", best.selected.size()); });
      }
      t.expect(p.selected == best.selected, [&] { return where() + " different selection"; });
      double cost = union_cost(p, p.selected);
      t.expect(cost <= budget + 1e-9, [&] { return where() + cat(" cost ", cost, " over budget"); });
      t.expect(std::abs(cost - p.estimated_cost) <= 1e-9, [&] { return where() + " estimated cost mismatch"; });
    }
  }
  t.expect(cones == 100, [&] { return cat("only ", cones, " cones generated"); });
  double secs = clock.seconds();
  t.expect(secs < 10.0, [&] { return cat("runtime ", secs, " s"); });
  return conclude(t, cat("cones=", cones, " max-paths=", max_paths, " degraded=", degraded));
}

namespace {

Task make_task(const std::string& id, int priority, double deadline) {
  Task t;
  t.id = id;
  t.priority = priority;
  t.deadline_us = deadline;
  return t;
}

void agenda_order(std::mt19937_64& rng, Tally& t) {
  // Random pushes interleaved with pops, against a linear-scan model.
  prk::Agenda agenda;
  struct Ref {
    int priority;
    double deadline;
    std::uint64_t seq;
    std::string id;
  };
  std::vector<Ref> model;
  std::uint64_t seq = 0;
  std::size_t popped = 0;
  auto key = [](const Ref& r) { return std::make_tuple(-r.priority, r.deadline, r.seq); };
  auto pop_both = [&] {
    auto it = std::min_element(model.begin(), model.end(), [&](const Ref& a, const Ref& b) { return key(a) < key(b); });
    auto got = agenda.pop();
    t.expect(got && got->id == it->id, [&] { return cat("dequeue ", popped, " got ", got ? got->id : "nothing", " want ", it->id); });
    model.erase(it);
    ++popped;
  };
  for (int i = 0; i < 1000; ++i) {
    int priority = static_cast<int>(rng() % 10);
    double deadline = rng() % 5 == 0 ? prk::kNoDeadline : 1000.0 * static_cast<double>(1 + rng() % 50);
    std::string id = cat("t", i);
    agenda.push(make_task(id, priority, deadline), 0.0);
    model.push_back({priority, deadline, seq++, id});
    while (!model.empty() && rng() % 3 == 0) pop_both();
  }
  while (!model.empty()) pop_both();
  t.expect(agenda.empty() && popped == 1000, [&] { return cat("dequeued ", popped); });
}

const prk::KnowledgeBase& scheduler_kb() {
  static const prk::KnowledgeBase kb = [] {
    std::mt19937_64 rng(90);
    oracle::RandomKbOptions o;
    o.min_wffs = 24;
    o.max_wffs = 30;
    o.max_rules = 20;
    for (;;) {
      oracle::RandomKb r = oracle::random_kb(rng, o);
      if (r.derived.size() >= 8 && r.inputs.size() >= 4) return r.kb;
    }
  }();
  return kb;
}

void executive_order(std::mt19937_64& rng, Tally& t, std::size_t& expired_queued, std::size_t& expired_running) {
  const prk::KnowledgeBase& kb = scheduler_kb();
  Engine e(kb);
  std::vector<std::string> inputs, derived;
  for (const std::string& w : e.wff_ids()) (e.is_input(w) ? inputs : derived).push_back(w);
  prk::VirtualClock clock;
  prk::TimingTable flat;
  flat.default_cost_us = 1.0;
  prk::Executive ex(e, flat, clock);
  std::vector<Task> submitted;
  for (int i = 0; i < 1000; ++i) {
    int priority = static_cast<int>(rng() % 5);
    double deadline = rng() % 4 == 0 ? prk::kNoDeadline : static_cast<double>(1 + rng() % 4000);
    Task task = make_task(cat("k", i), priority, deadline);
    if (rng() % 10 < 3) {
      task.kind = prk::TaskKind::Forward;
      for (int j = 0; j < 3; ++j) task.evidence.push_back({inputs[rng() % inputs.size()], oracle::random_interval(rng)});
      std::sort(task.evidence.begin(), task.evidence.end(),
                [](const prk::Evidence& a, const prk::Evidence& b) { return a.wff < b.wff; });
      task.evidence.erase(std::unique(task.evidence.begin(), task.evidence.end(),
                                      [](const auto& a, const auto& b) { return a.wff == b.wff; }),
                          task.evidence.end());
    } else {
      task.goal = derived[rng() % derived.size()];
    }
    submitted.push_back(task);
    ex.submit(task);
  }
  ex.run_until_idle();
  std::map<std::string, TaskResult> results;
  for (TaskResult& r : ex.results().drain()) results[r.task] = r;
  t.expect(results.size() == 1000, [&] { return cat(results.size(), " results for 1000 tasks"); });

  std::vector<std::size_t> order(submitted.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (submitted[a].priority != submitted[b].priority) return submitted[a].priority > submitted[b].priority;
    return submitted[a].deadline_us < submitted[b].deadline_us;
  });
  std::vector<std::string> log = ex.execution_log();
  std::set<std::string> ran(log.begin(), log.end());
  std::size_t next = 0;
  double now = 0.0;
  for (std::size_t i : order) {
    const Task& task = submitted[i];
    const TaskResult& r = results[task.id];
    if (now >= task.deadline_us) {
      ++expired_queued;
      t.expect(r.status == TaskStatus::Expired && r.units == 0 && !ran.count(task.id),
               [&] { return cat(task.id, " ran after its deadline"); });
      continue;
    }
    t.expect(next < log.size() && log[next] == task.id,
             [&] { return cat("execution ", next, " is ", next < log.size() ? log[next] : "none", " want ", task.id); });
    ++next;
    now += r.elapsed_us;
    if (r.status == TaskStatus::Expired) ++expired_running;
    t.expect(now <= task.deadline_us, [&] { return cat(task.id, " worked past its deadline"); });
  }
  t.expect(next == log.size(), [&] { return cat("log has ", log.size(), " entries, expected ", next); });
  t.expect(now == clock.now_us(), [&] { return cat("clock ", clock.now_us(), " vs replayed ", now); });
}

void preemption(std::mt19937_64& rng, Tally& t, std::size_t& trials) {
  prk::TimingTable flat;
  flat.default_cost_us = 1.0;
  int attempts = 0;
  while (trials < 50 && attempts++ < 10000) {
    oracle::RandomKb r = oracle::random_kb(rng);
    if (r.derived.size() < 2) continue;
    Engine base(r.kb);
    for (const std::string& in : r.inputs) base.assert_evidence(in, oracle::random_interval(rng));
    std::string low = r.derived.front();
    std::size_t most = 0;
    for (const std::string& w : r.derived) {
      std::size_t n = base.pending_units(*base.find(w)).size();
      if (n > most) {
        most = n;
        low = w;
      }
    }
    std::string high = r.derived[rng() % r.derived.size()];

    Engine uninterrupted = base;
    prk::VirtualClock uc;
    prk::Executive ux(uninterrupted, flat, uc);
    Task lt = make_task("low", 0, prk::kNoDeadline);
    lt.goal = low;
    ux.submit(lt);
    ux.run_until_idle();
    TaskResult ref_low = *ux.results().try_pop();
    if (ref_low.units < 2) continue;
    ++trials;

    Engine ref = base;
    auto ref_high = ref.query(high).first;

    Engine e = base;
    prk::VirtualClock clock;
    prk::Executive ex(e, flat, clock);
    std::size_t k = rng() % ref_low.units;
    struct Boundary {
      std::string task;
      std::size_t units;
      double now;
    };
    std::vector<Boundary> seen;
    std::size_t arrival = SIZE_MAX;
    ex.set_boundary_hook([&](const Task& running, std::size_t) {
      seen.push_back({running.id, running.units, clock.now_us()});
      if (arrival == SIZE_MAX && running.id == "low" && running.units == k) {
        arrival = seen.size() - 1;
        Task ht = make_task("high", 5, prk::kNoDeadline);
        ht.goal = high;
        ex.submit(ht);
      }
    });
    ex.submit(lt);
    ex.run_until_idle();
    auto rs = ex.results().drain();
    auto where = [&] { return cat("trial ", trials, " low=", low, " high=", high, " k=", k); };
    t.expect(ex.execution_log() == std::vector<std::string>{"low", "high", "low"},
             [&] { return where() + " execution order"; });
    if (rs.size() != 2) {
      t.fail(where() + cat(" ", rs.size(), " results"));
      continue;
    }
    const TaskResult& h = rs[0];
    const TaskResult& l = rs[1];
    t.expect(h.task == "high" && l.task == "low", [&] { return where() + " result order"; });
    // No unit of low may run between the arrival and the switch to high.
    bool prompt = arrival != SIZE_MAX;
    if (prompt && arrival + 1 < seen.size()) {
      const Boundary& after = seen[arrival + 1];
      prompt = after.task == "high" ? after.now == seen[arrival].now : after.units == k;
    } else if (prompt) {
      prompt = l.units == k;
    }
    t.expect(prompt, [&] { return where() + " not preempted at the arrival boundary"; });
    t.expect(l.preemptions == 1 && l.status == TaskStatus::Done && h.status == TaskStatus::Done,
             [&] { return where() + " statuses"; });
    t.expect(l.interval == ref_low.interval && l.validity == ref_low.validity && l.partial == ref_low.partial,
             [&] { return where() + " low result differs from the uninterrupted run"; });
    t.expect(h.interval && *h.interval == ref_high, [&] { return where() + " high result differs"; });
    t.expect(l.units + h.units >= ref_low.units, [&] { return where() + " work lost"; });
  }
}

}  // namespace

Outcome scheduler() {
  Tally t;
  std::mt19937_64 rng(9);
  agenda_order(rng, t);
  std::size_t expired_queued = 0, expired_running = 0, trials = 0;
  executive_order(rng, t, expired_queued, expired_running);
  preemption(rng, t, trials);
  t.expect(expired_queued > 0, [] { return std::string("no task expired in the queue"); });
  t.expect(trials == 50, [&] { return cat("only ", trials, " preemption trials"); });
  return conclude(t, cat("tasks=1000 expired-queued=", expired_queued, " expired-running=", expired_running,
                        " preemption-trials=", trials));
}

}  // namespace acceptance

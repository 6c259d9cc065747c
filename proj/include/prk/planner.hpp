#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "prk/engine.hpp"
#include "prk/profiler.hpp"

namespace prk {

enum class PlanMode { Coverage, Certainty };

/// Abstract selection problem: paths are sets of units; a unit's cost is paid
/// once however many selected paths share it.
struct PlanProblem {
  std::vector<double> unit_costs;
  std::vector<std::vector<std::size_t>> paths;
  std::vector<double> certainty;  // per path; used in Certainty mode
  double budget = 0.0;
};

struct PlanSelection {
  std::vector<std::size_t> selected;  // ascending path indices
  double cost = 0.0;
  double score = 0.0;
  bool degraded = false;
  bool exact = true;
};

inline constexpr std::size_t kExactPathLimit = 20;

double selection_cost(const PlanProblem& p, const std::vector<std::size_t>& paths);

/// Feasible path set maximizing coverage (path count) or the sum of certainty
/// bounds; ties go to the lexicographically smallest index list.  Exact up to
/// kExactPathLimit paths, greedy beyond.  When no single path fits, returns
/// the cheapest path with `degraded` set.
PlanSelection select_paths(const PlanProblem& p, PlanMode mode);

struct ProofPath {
  std::vector<NodeId> nodes;  // goal first, leaf last
  std::vector<std::size_t> units;
  double certainty_bound = 1.0;
};

struct PlanOptions {
  PlanMode mode = PlanMode::Coverage;
  std::optional<std::set<std::string>> scope;  // rule templates allowed; all when unset
  std::size_t max_paths = 4096;
};

struct PathPlan {
  std::string goal;
  std::vector<ProofPath> paths;
  std::vector<std::string> unit_names;
  std::vector<double> unit_costs;
  std::vector<std::size_t> selected;
  std::set<NodeId> fired;  // dirty units to execute
  double estimated_cost = 0.0;
  double budget = 0.0;
  bool degraded = false;
  bool exact = true;
  bool truncated = false;
  std::string warning;

  /// One-line summary `paths=3/4 cost=12.5 budget=20`.
  std::string summary() const;
};

/// Enumerates root-to-leaf chains in the goal's ancestor cone and picks the
/// best budget-feasible subset.  Only dirty units cost anything.
PathPlan plan(const Engine& engine, NodeId goal, double budget_us, const TimingTable& timing,
              const PlanOptions& options = {});

}  // namespace prk

#pragma once

// Reference implementations used to cross-check the library.  They share
// only data types with it: every number is recomputed from the definitions.

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "prk/calculus.hpp"
#include "prk/kb.hpp"
#include "prk/planner.hpp"

namespace oracle {

using prk::Interval;
using prk::Tnorm;

double tnorm(Tnorm f, double a, double b);
double tconorm(Tnorm f, double a, double b);

inline constexpr Tnorm kFamilies[] = {Tnorm::T1, Tnorm::T1_5, Tnorm::T2, Tnorm::T2_5, Tnorm::T3};

struct RandomKbOptions {
  int min_wffs = 4;
  int max_wffs = 30;
  int max_rules = 20;
  int max_premises = 3;
  bool positive_only = false;  // only plain wff premises, no contexts or defaults
  bool defaults = true;
  bool contexts = true;
};

struct RandomKb {
  std::string text;
  prk::KnowledgeBase kb;
  std::vector<std::string> inputs;   // wff ids nothing concludes
  std::vector<std::string> derived;  // concluded wff ids
};

/// Acyclic propositional KB over wffs w0..wN: rule premises always have a
/// smaller index than the conclusion.
RandomKb random_kb(std::mt19937_64& rng, const RandomKbOptions& opts = {});

Interval random_interval(std::mt19937_64& rng, double grid = 0.0);

/// Batch evaluation of a propositional KB by Jacobi iteration from total
/// ignorance until nothing changes.  NM premises read `nm_assumption`
/// (keyed "rule#index") when given; otherwise they are evaluated live.
std::map<std::string, Interval> fixpoint(const prk::KnowledgeBase& kb, const std::map<std::string, Interval>& evidence,
                                         bool defaults = true,
                                         const std::map<std::string, double>* nm_assumption = nullptr);

/// Every self-consistent assignment to the KB's NM premises and the values it
/// produces (deduplicated by value).
std::vector<std::map<std::string, Interval>> nm_fixed_points(const prk::KnowledgeBase& kb,
                                                             const std::map<std::string, Interval>& evidence);

/// Wff ids in the ancestor cone of `goal` (rule premises, transitively).
std::set<std::string> ancestor_wffs(const prk::KnowledgeBase& kb, const std::string& goal);

/// Smallest evidence subsets whose reset to [0,1] clears the conflict on `goal`.
std::vector<std::vector<std::string>> conflict_sources(const prk::KnowledgeBase& kb,
                                                       const std::map<std::string, Interval>& evidence,
                                                       const std::string& goal);

struct BruteForcePlan {
  double score = -1.0;
  std::vector<std::size_t> selected;
  double cost = 0.0;
};

/// Exhaustive search over every non-empty subset of paths.
BruteForcePlan brute_force_plan(const prk::PlanProblem& p, prk::PlanMode mode);

}  // namespace oracle

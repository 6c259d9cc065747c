#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "prk/calculus.hpp"
#include "prk/kb.hpp"

namespace prk {

/// Plain directed graph over node indices; `nm` marks arcs that enter a rule
/// through a non-monotonic antecedent.
struct DependencyGraph {
  struct Arc {
    std::uint32_t from = 0;
    std::uint32_t to = 0;
    bool nm = false;
  };

  std::size_t node_count = 0;
  std::vector<Arc> arcs;
};

/// A cycle made only of monotonic arcs.  `cycle` lists node indices and
/// repeats the first node at the end.
class MonotonicCycleError : public std::runtime_error {
public:
  explicit MonotonicCycleError(std::vector<std::uint32_t> cycle);
  const std::vector<std::uint32_t>& cycle() const { return cycle_; }

private:
  std::vector<std::uint32_t> cycle_;
};

/// Strongly connected component in which every cycle crosses a non-monotonic arc.
struct NmLoop {
  std::vector<std::uint32_t> members;               // sorted
  std::vector<DependencyGraph::Arc> boundary;       // arcs entering from outside
  std::vector<DependencyGraph::Arc> nm_arcs;        // non-monotonic arcs inside
};

/// Finds non-monotonic loops; throws MonotonicCycleError when some cycle has no
/// non-monotonic arc.
std::vector<NmLoop> find_loops(const DependencyGraph& g);

/// Topological order in which each loop's members are contiguous.  Ties are
/// broken by the smallest node index so the order is deterministic.
std::vector<std::uint32_t> condensed_topo_order(const DependencyGraph& g, const std::vector<NmLoop>& loops);

/// Value of the antecedent ~[alpha]p given LB(p): 1 iff lb < alpha.
inline double nm_antecedent(double lb, double alpha) { return lb < alpha ? 1.0 : 0.0; }

// ---------------------------------------------------------------------------
// Fixed points of one loop.
// ---------------------------------------------------------------------------

struct LoopPremise {
  enum class Kind { Fixed, Member, NegatedMember, TestMember, NmMember };

  Kind kind = Kind::Fixed;
  std::uint32_t member = 0;
  Interval fixed;  // Fixed: the premise's interval (computed outside the loop)
  TestKind test = TestKind::LbAtLeast;
  double threshold = 0.0;
  double alpha = 0.0;
};

struct LoopRule {
  std::string id;
  Tnorm family = Tnorm::T3;
  double sufficiency = 1.0;
  double necessity = 0.0;
  bool applicable = true;
  std::vector<LoopPremise> premises;
  std::uint32_t conclusion = 0;
};

/// Everything needed to propagate one loop with its boundary held fixed.
struct LoopProblem {
  std::vector<std::string> wff_ids;
  std::vector<Tnorm> aggregation;
  /// Labels and refutation contributions entering each member from rules
  /// outside the loop.
  std::vector<std::vector<double>> boundary_labels;
  std::vector<std::vector<double>> boundary_refutations;
  std::vector<LoopRule> rules;

  std::size_t nm_antecedent_count() const;
};

struct Extension {
  std::vector<Interval> values;      // per member wff
  std::vector<double> rule_labels;   // per loop rule
  std::vector<double> rule_refutations;
  std::vector<bool> assumptions;     // per non-monotonic antecedent, in rule/premise order
  double score = 0.0;
};

class LoopTooLargeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultNmCap = 16;

/// One monotonic pass through the loop under fixed antecedent assumptions.
Extension propagate_loop(const LoopProblem& loop, const std::vector<bool>& assumptions);

/// All self-consistent fixed points, deduplicated, in increasing assumption order.
std::vector<Extension> enumerate_extensions(const LoopProblem& loop, std::size_t cap = kDefaultNmCap);

/// Sum over members of the departure from ignorance, LB + (1 - UB).
double information_content(std::span<const Interval> values);

struct ExtensionPreference {
  /// Defaults to information_content.
  std::function<double(const Extension&)> score;
};

/// Arg-max of the score; exact ties go to the lexicographically smaller LB
/// vector over the members sorted by wff id.
const Extension& select_extension(std::span<const Extension> extensions, const LoopProblem& loop,
                                  const ExtensionPreference& preference = {});

}  // namespace prk

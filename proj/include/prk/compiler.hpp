#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prk/kb.hpp"
#include "prk/nonmono.hpp"

namespace prk {

enum class GraphNodeKind { Wff, Rule };
enum class ArcKind { Premise, NegatedPremise, Test, Nm, Conclusion };

std::string_view to_string(ArcKind k);
std::optional<ArcKind> parse_arc_kind(std::string_view s);

/// OR nodes are keyed by wff signature (`var/arity=value`), AND nodes by rule name.
struct GraphNode {
  GraphNodeKind kind = GraphNodeKind::Wff;
  std::string key;
  bool input = false;

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphArc {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  ArcKind kind = ArcKind::Premise;
  double alpha = 0.0;  // Nm arcs only

  friend bool operator==(const GraphArc&, const GraphArc&) = default;
};

/// Rule graph over templates.  Node ids are canonical: OR nodes sorted by key,
/// then AND nodes sorted by name.
struct RuleGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphArc> arcs;  // sorted
  std::vector<std::uint32_t> topo_order;
  std::vector<std::vector<std::uint32_t>> nm_loops;

  std::optional<std::uint32_t> find(GraphNodeKind kind, const std::string& key) const;
  std::vector<std::uint32_t> or_nodes() const;
  std::vector<std::uint32_t> and_nodes() const;
  std::size_t in_degree(std::uint32_t n) const;
  DependencyGraph dependencies() const;

  friend bool operator==(const RuleGraph&, const RuleGraph&) = default;
};

/// Monotonic cycle in a KB; `path` alternates wff signatures and rule names
/// and ends where it starts.
class CycleError : public std::runtime_error {
public:
  explicit CycleError(std::vector<std::string> path);
  const std::vector<std::string>& path() const { return path_; }

private:
  std::vector<std::string> path_;
};

std::string format_cycle(const std::vector<std::string>& path);

RuleGraph build_graph(const KnowledgeBase& kb);

/// Invariant check used by the loader: bipartite arcs, one conclusion arc per
/// rule, forward topo order.  Throws std::runtime_error on violation.
void check_graph(const RuleGraph& g);

}  // namespace prk

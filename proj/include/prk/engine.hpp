#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prk/calculus.hpp"
#include "prk/kb.hpp"
#include "prk/network_io.hpp"
#include "prk/nonmono.hpp"
#include "prk/predicates.hpp"
#include "prk/track.hpp"

namespace prk {

enum class Validity { Valid, Unreliable, Ignorant, Inconsistent };
std::string_view to_string(Validity v);

inline constexpr double kConflictTolerance = 1e-12;
inline constexpr double kDefaultIgnoranceThreshold = 0.95;

/// lb(w) + lb(~w) > 1, i.e. lb > ub beyond rounding.
inline bool is_conflict(Interval v) { return v.lb - v.ub > kConflictTolerance; }

using NodeId = std::uint32_t;
enum class NodeKind { Wff, Justification };
enum class CostKind { Rule, Predicate };

struct NodeState {
  Interval interval;
  Validity validity = Validity::Unreliable;
  std::uint64_t timestamp = 0;
  std::vector<double> support;  // labels entering the node
};

struct DefaultSpec {
  std::string wff;
  Interval interval;
  double theta = 1.0;
  bool active = false;
};

struct Conflict {
  std::string wff;
  double lb = 0.0;
  double lb_negation = 0.0;
  /// Every smallest set of evidence inputs whose reset to [0,1] clears the conflict.
  std::vector<std::vector<std::string>> suspected_sources;
  bool search_truncated = false;
};

struct Evidence {
  std::string wff;
  Interval interval;
};

struct ChangeSet {
  std::vector<std::string> changed_inputs;
  std::size_t invalidated = 0;
  bool empty() const { return changed_inputs.empty(); }
};

class EngineError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ConflictPolicy { Report, ResetSources };

struct EngineOptions {
  bool defaults_enabled = true;
  bool memoize_predicates = true;
  std::size_t nm_cap = kDefaultNmCap;
  std::size_t conflict_search_inputs = 16;
  ConflictPolicy conflict_policy = ConflictPolicy::Report;
};

/// Proof trace node.  Wff nodes have justification children; justification
/// nodes have premise children.
struct TraceNode {
  enum class Kind { Wff, Justification, Call, Loop };
  Kind kind = Kind::Wff;
  std::string id;
  Interval interval;
  Validity validity = Validity::Valid;
  std::string support;  // evidence | rules | default | none | loop | cycle
  double theta = 0.0;

  // justification
  std::string rule;
  std::string premise_role;  // wff | not | test | nm | call
  double label = 0.0;
  double refutation = 0.0;
  double sufficiency = 0.0;
  double necessity = 0.0;
  Tnorm family = Tnorm::T3;
  bool dominant = false;
  bool applicable = true;

  // loop
  std::size_t extension_count = 0;
  std::size_t chosen_extension = 0;

  std::vector<TraceNode> children;
};

std::string render_trace(const TraceNode& t);

struct LoopReport {
  std::vector<std::string> members;
  std::vector<Extension> extensions;
  int chosen = -1;
  bool anomaly = false;
};

/// Which template a justification instantiates and which host calls it makes.
struct JustificationInfo {
  std::string id;
  const RuleTemplate* rule = nullptr;
  std::vector<std::string> predicates;  // one entry per call, in premise then context order
  std::vector<std::string> call_keys;   // memo keys, same order
};

class Engine {
public:
  using TimingSink = std::function<void(CostKind kind, const std::string& key, double micros)>;

  explicit Engine(CompiledNetwork net, PredicateRegistry predicates = PredicateRegistry::with_builtins(),
                  EngineOptions options = {});
  explicit Engine(const KnowledgeBase& kb, PredicateRegistry predicates = PredicateRegistry::with_builtins(),
                  EngineOptions options = {});

  const KnowledgeBase& kb() const { return net_->kb; }
  const CompiledNetwork& network() const { return *net_; }
  const EngineOptions& options() const { return options_; }

  // Objects, attributes and meta variables.
  std::vector<std::string> create_object(const std::string& id, const std::string& type);
  bool has_object(const std::string& id) const { return objects_.count(id) > 0; }
  const ObjectTable& objects() const { return objects_; }
  void set_attribute(const std::string& object, const std::string& name, const std::string& value);
  void set_meta(const std::string& name, double value);

  // Evidence and propagation.
  ChangeSet assert_evidence(const std::string& wff, Interval interval);
  ChangeSet assert_batch(std::span<const Evidence> batch);
  ChangeSet retract_evidence(const std::string& wff);
  bool is_input(const std::string& wff) const;
  /// Recomputes every unreliable node once, in topological order; returns the
  /// wffs whose published interval changed.
  std::vector<std::string> propagate();
  /// `~id` queries the negation.
  std::pair<Interval, Validity> query(const std::string& wff);
  /// Cached state without recomputation.
  NodeState state(const std::string& wff) const;
  std::vector<Conflict> detect_conflicts();
  /// Detects, and under ConflictPolicy::ResetSources retracts the suspected inputs.
  std::vector<Conflict> handle_conflicts();
  void register_default(DefaultSpec spec);
  std::optional<DefaultSpec> default_for(const std::string& wff) const;
  TraceNode explain(const std::string& wff);
  bool evaluate_context(const std::string& instance);
  std::pair<double, double> arc_label(const std::string& instance) const;
  void invalidate_all();

  std::vector<std::string> wff_ids() const;
  std::vector<std::string> instance_ids() const;
  std::vector<LoopReport> loop_reports() const;
  std::uint64_t clock() const { return clock_; }

  // Instrumentation.
  std::uint64_t recompute_count(NodeId n) const { return nodes_[n].recomputes; }
  std::uint64_t total_recomputes() const { return total_recomputes_; }
  void reset_counters();
  void set_timing_sink(TimingSink sink) { timing_ = std::move(sink); }
  /// Re-evaluates a justification without committing, reporting time to the sink.
  void sample_justification(NodeId n);

  // Graph introspection.
  std::size_t node_count() const { return nodes_.size(); }
  NodeKind kind(NodeId n) const { return nodes_[n].kind; }
  const std::vector<NodeId>& parents(NodeId n) const { return nodes_[n].parents; }
  const std::vector<NodeId>& children(NodeId n) const { return nodes_[n].children; }
  bool dirty(NodeId n) const { return nodes_[n].dirty; }
  std::optional<NodeId> find(const std::string& id) const;
  const std::string& node_id(NodeId n) const;
  int loop_of(NodeId n) const { return nodes_[n].loop; }
  const std::vector<NodeId>& loop_nodes(int loop) const { return loops_[static_cast<std::size_t>(loop)].nodes; }
  std::size_t topo_position(NodeId n) const { return nodes_[n].topo_pos; }
  const JustificationInfo& justification(NodeId n) const;
  /// Ancestor cone including `n`, sorted by topological position.
  std::vector<NodeId> ancestors(NodeId n) const;
  std::vector<NodeId> descendants(NodeId n) const;

  // Step-wise evaluation used by the executive.
  void begin_cycle() { memo_.clear(); }
  /// Unit representative: the first loop member for loop nodes, else `n`.
  NodeId unit_of(NodeId n) const;
  std::vector<NodeId> pending_units(NodeId goal) const;
  std::vector<NodeId> pending_units() const;
  bool ready(NodeId unit) const;  // every parent outside the unit is clean
  void recompute_unit(NodeId unit);
  /// Evaluates `goal` on scratch state: dirty units listed in `fired` are
  /// recomputed, other dirty justifications contribute nothing.  No engine
  /// state is written except the predicate memo.
  Interval evaluate_partial(NodeId goal, const std::set<NodeId>& fired);
  /// Evaluates `goal` from scratch with some inputs replaced.
  Interval evaluate_with_overrides(NodeId goal, const std::map<NodeId, Interval>& overrides);

private:
  struct GroundPremise {
    enum class Kind { Wff, Negated, Test, Nm, Call };
    Kind kind = Kind::Wff;
    NodeId wff = 0;
    TestKind test = TestKind::LbAtLeast;
    double threshold = 0.0;
    double alpha = 0.0;
    std::size_t call = 0;
  };
  struct GroundCall {
    std::string predicate;
    std::vector<std::string> args;
    std::string key;
  };
  struct Node {
    NodeKind kind = NodeKind::Wff;
    std::uint32_t local = 0;
    std::vector<NodeId> parents;
    std::vector<NodeId> children;
    bool dirty = true;
    std::size_t topo_pos = 0;
    int loop = -1;
    std::uint64_t recomputes = 0;
  };
  struct WffData {
    WffKey key;
    std::string id;
    bool input = false;
    std::optional<Interval> evidence;
    Interval derived;
    Interval value;
    Validity validity = Validity::Valid;
    std::uint64_t timestamp = 0;
    Tnorm aggregation = Tnorm::T3;
    double ignorance_threshold = kDefaultIgnoranceThreshold;
    std::optional<DefaultSpec> default_spec;
    std::vector<double> support;
  };
  struct JustData {
    JustificationInfo info;
    std::vector<GroundPremise> premises;
    std::vector<GroundCall> calls;        // premise calls then context calls
    std::size_t context_begin = 0;        // index of the first context call
    NodeId conclusion = 0;
    double label = 0.0;
    double refutation = 0.0;
    bool applicable = true;
    bool reads_meta = false;
  };
  struct LoopData {
    std::vector<NodeId> nodes;     // sorted by id
    std::vector<NodeId> wffs;
    std::vector<NodeId> rules;
    LoopReport report;
  };
  struct LoopOutcome {
    std::vector<Interval> values;  // per loop wff
    std::vector<std::pair<double, double>> labels;  // per loop rule
    std::vector<Extension> extensions;
    int chosen = -1;
  };

  using WffLookup = std::function<Interval(NodeId)>;
  using JustLookup = std::function<std::pair<double, double>(NodeId)>;

  void instantiate_all_propositional();
  void add_instance(const RuleTemplate& t, const RuleInstance& inst);
  NodeId wff_node(const WffKey& key);
  void attach_default(WffData& w, const DefaultDecl& d);
  void restructure();
  void mark_dirty(NodeId n);
  void mark_unit_dirty(NodeId n);
  void recompute_node(NodeId n);
  void recompute_loop(int loop);
  void apply_input(NodeId n);
  void commit_wff(NodeId n, Interval derived, std::vector<double> support);
  Interval published(const WffData& w, Interval derived) const;
  Validity classify(const WffData& w, Interval v) const;
  double call_value(const GroundCall& c);
  bool applicable(const JustData& j);
  struct JustValue {
    double label = 0.0;
    double refutation = 0.0;
    bool applicable = true;
  };
  JustValue eval_justification(const JustData& j, const WffLookup& value_of);
  Interval eval_wff(const WffData& w, const Node& n, const JustLookup& label_of,
                    std::vector<double>* support = nullptr) const;
  LoopOutcome eval_loop(const LoopData& l, const WffLookup& value_of, const JustLookup& label_of);
  Interval scratch_evaluate(NodeId goal, const std::map<NodeId, Interval>* overrides, const std::set<NodeId>* fired,
                            bool recompute_clean);
  std::vector<NodeId> dirty_cone(NodeId goal) const;
  void recompute_units(std::vector<NodeId> nodes);
  TraceNode trace(NodeId n, std::set<NodeId>& path, std::size_t& budget);
  std::optional<NodeId> input_node_for(const std::string& wff, bool create);
  std::vector<std::vector<std::string>> suspected_sources(NodeId w, bool& truncated);

  Interval value(NodeId w) const { return wffs_[nodes_[w].local].value; }
  WffData& wff(NodeId n) { return wffs_[nodes_[n].local]; }
  const WffData& wff(NodeId n) const { return wffs_[nodes_[n].local]; }
  JustData& just(NodeId n) { return justs_[nodes_[n].local]; }
  const JustData& just(NodeId n) const { return justs_[nodes_[n].local]; }

  // Shared so copies of an engine keep valid pointers into the templates.
  std::shared_ptr<const CompiledNetwork> net_;
  PredicateRegistry predicates_;
  EngineOptions options_;

  std::vector<Node> nodes_;
  std::vector<WffData> wffs_;
  std::vector<JustData> justs_;
  std::vector<LoopData> loops_;
  std::unordered_map<std::string, NodeId> wff_index_;
  std::unordered_map<std::string, NodeId> just_index_;
  std::set<std::string> input_signatures_;

  ObjectTable objects_;
  std::map<std::string, std::vector<std::string>> objects_by_type_;
  std::map<std::string, double> meta_;
  std::unordered_map<std::string, std::vector<NodeId>> object_calls_;
  std::unordered_map<std::string, double> memo_;

  std::vector<NodeId> dirty_list_;
  std::size_t next_topo_ = 0;
  std::uint64_t clock_ = 0;
  std::uint64_t total_recomputes_ = 0;
  std::vector<std::string> changed_;
  TimingSink timing_;
  double predicate_micros_ = 0.0;
};

/// Applies a track file: `type` records create objects, every record sets the
/// object attribute when lb >= 0.5, records on input wffs become evidence.
/// Propagates between distinct times and calls `after_phase(t)` after each.
struct ReplayStats {
  std::size_t records = 0;
  std::size_t evidence = 0;
  std::size_t skipped = 0;
  std::size_t phases = 0;
};

ReplayStats replay(Engine& engine, const TrackFile& track, const std::function<void(double)>& after_phase = {},
                   bool propagate = true);

}  // namespace prk

#include "prk/engine.hpp"

#include <algorithm>
#include <chrono>

namespace prk {

std::string_view to_string(Validity v) {
  switch (v) {
    case Validity::Valid: return "valid";
    case Validity::Unreliable: return "unreliable";
    case Validity::Ignorant: return "ignorant";
    case Validity::Inconsistent: return "inconsistent";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point start) {
  return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
}

double test_value(TestKind k, double threshold, Interval v) {
  switch (k) {
    case TestKind::LbAtLeast: return v.lb >= threshold ? 1.0 : 0.0;
    case TestKind::UbAtMost: return v.ub <= threshold ? 1.0 : 0.0;
    case TestKind::IgnoranceBelow: return v.ignorance() < threshold ? 1.0 : 0.0;
  }
  return 0.0;
}

bool pattern_matches(const WffPattern& p, const WffKey& k) {
  if (p.variable != k.variable || p.value != k.value || p.args.size() != k.args.size()) return false;
  std::map<std::string, std::string> bound;
  for (std::size_t i = 0; i < p.args.size(); ++i) {
    const Term& t = p.args[i];
    if (!t.is_variable) {
      if (t.name != k.args[i]) return false;
      continue;
    }
    auto [it, fresh] = bound.emplace(t.name, k.args[i]);
    if (!fresh && it->second != k.args[i]) return false;
  }
  return true;
}

std::string call_key(const std::string& name, const std::vector<std::string>& args) {
  std::string k = name + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) k += ',';
    k += args[i];
  }
  return k + ")";
}

void check_interval(const std::string& wff, Interval v) {
  if (!(v.lb >= 0.0 && v.ub <= 1.0 && v.lb <= v.ub)) {
    throw EngineError("invalid interval for " + wff + ": [" + format_number(v.lb) + ", " + format_number(v.ub) + "]");
  }
}

}  // namespace

Engine::Engine(const KnowledgeBase& kb, PredicateRegistry predicates, EngineOptions options)
    : Engine(compile(kb), std::move(predicates), options) {}

Engine::Engine(CompiledNetwork net, PredicateRegistry predicates, EngineOptions options)
    : net_(std::make_shared<const CompiledNetwork>(std::move(net))), predicates_(std::move(predicates)), options_(options) {
  for (const GraphNode& n : net_->graph.nodes) {
    if (n.kind == GraphNodeKind::Wff && n.input) input_signatures_.insert(n.key);
  }
  for (const RuleTemplate& t : net_->kb.templates) {
    auto check = [&](const PredicateCall& c) {
      if (!predicates_.contains(c.name)) throw EngineError("unregistered predicate " + c.name + " in rule " + t.name);
    };
    for (const Premise& p : t.premises) {
      if (p.kind == PremiseKind::Call) check(p.call);
    }
    for (const PredicateCall& c : t.context) check(c);
  }
  instantiate_all_propositional();
  for (const DefaultDecl& d : net_->kb.defaults) {
    if (d.pattern.ground()) wff_node(ground(d.pattern, {}));
  }
  restructure();
}

void Engine::instantiate_all_propositional() {
  for (const RuleTemplate& t : net_->kb.templates) {
    if (t.vars.empty()) add_instance(t, instantiate(t, {}));
  }
}

NodeId Engine::wff_node(const WffKey& key) {
  std::string id = key.id();
  if (auto it = wff_index_.find(id); it != wff_index_.end()) return it->second;
  NodeId n = static_cast<NodeId>(nodes_.size());
  Node node;
  node.kind = NodeKind::Wff;
  node.local = static_cast<std::uint32_t>(wffs_.size());
  node.dirty = false;
  node.topo_pos = next_topo_++;
  nodes_.push_back(node);

  WffData w;
  w.key = key;
  w.id = id;
  w.input = !net_->kb.concludes(key.signature());
  w.aggregation = net_->kb.aggregation_for(key.variable);
  if (auto it = net_->kb.ignorance_thresholds.find(key.variable); it != net_->kb.ignorance_thresholds.end()) {
    w.ignorance_threshold = it->second;
  }
  w.value = w.derived = Interval::unknown();
  w.validity = classify(w, w.value);
  for (const DefaultDecl& d : net_->kb.defaults) {
    if (pattern_matches(d.pattern, key)) {
      attach_default(w, d);
      break;
    }
  }
  wffs_.push_back(std::move(w));
  wff_index_.emplace(id, n);
  mark_dirty(n);
  return n;
}

void Engine::attach_default(WffData& w, const DefaultDecl& d) {
  w.default_spec = DefaultSpec{w.id, d.interval, d.theta, false};
}

void Engine::add_instance(const RuleTemplate& t, const RuleInstance& inst) {
  NodeId j = static_cast<NodeId>(nodes_.size());
  Node node;
  node.kind = NodeKind::Justification;
  node.local = static_cast<std::uint32_t>(justs_.size());
  node.dirty = false;
  node.topo_pos = next_topo_++;
  nodes_.push_back(node);

  JustData d;
  d.info.id = inst.id;
  d.info.rule = &t;
  const auto& b = inst.bindings;
  auto add_call = [&](const PredicateCall& c) {
    GroundCall g{c.name, ground_args(c.args, b), ""};
    g.key = call_key(g.predicate, g.args);
    d.info.predicates.push_back(g.predicate);
    d.info.call_keys.push_back(g.key);
    d.reads_meta = d.reads_meta || (c.name != "attr=" && c.name != "attr!=");
    d.calls.push_back(std::move(g));
    return d.calls.size() - 1;
  };
  for (const Premise& p : t.premises) {
    GroundPremise gp;
    switch (p.kind) {
      case PremiseKind::Call:
        gp.kind = GroundPremise::Kind::Call;
        gp.call = add_call(p.call);
        break;
      case PremiseKind::Wff: gp.kind = GroundPremise::Kind::Wff; break;
      case PremiseKind::NegatedWff: gp.kind = GroundPremise::Kind::Negated; break;
      case PremiseKind::Test:
        gp.kind = GroundPremise::Kind::Test;
        gp.test = p.test;
        gp.threshold = p.threshold;
        break;
    }
    if (p.kind != PremiseKind::Call) gp.wff = wff_node(ground(p.wff, b));
    d.premises.push_back(gp);
  }
  for (const NmPremise& p : t.nm_premises) {
    GroundPremise gp;
    gp.kind = GroundPremise::Kind::Nm;
    gp.alpha = p.alpha;
    gp.wff = wff_node(ground(p.wff, b));
    d.premises.push_back(gp);
  }
  d.context_begin = d.calls.size();
  for (const PredicateCall& c : t.context) add_call(c);
  d.conclusion = wff_node(ground(t.conclusion, b));

  for (const GroundPremise& gp : d.premises) {
    if (gp.kind == GroundPremise::Kind::Call) continue;
    auto& ps = nodes_[j].parents;
    if (std::find(ps.begin(), ps.end(), gp.wff) == ps.end()) {
      ps.push_back(gp.wff);
      nodes_[gp.wff].children.push_back(j);
    }
  }
  nodes_[j].children.push_back(d.conclusion);
  nodes_[d.conclusion].parents.push_back(j);

  if (!d.calls.empty()) {
    std::set<std::string> objs;
    for (const auto& [var, obj] : b) objs.insert(obj);
    for (const GroundCall& c : d.calls) {
      for (const std::string& a : c.args) {
        if (objects_.count(a)) objs.insert(a);
      }
    }
    for (const std::string& o : objs) object_calls_[o].push_back(j);
  }

  just_index_.emplace(inst.id, j);
  justs_.push_back(std::move(d));
  mark_dirty(j);
}

std::vector<std::string> Engine::create_object(const std::string& id, const std::string& type) {
  if (!net_->kb.object_types.count(type)) throw EngineError("undeclared object type " + type);
  if (objects_.count(id)) throw EngineError("duplicate object id " + id);
  if (id.empty() || id == "-") throw EngineError("invalid object id '" + id + "'");
  objects_[id] = ObjectInfo{type, {}};
  objects_by_type_[type].push_back(id);
  ++clock_;

  std::vector<std::string> created;
  for (const RuleTemplate& t : net_->kb.templates) {
    if (t.vars.empty()) continue;
    std::vector<std::string> chosen(t.vars.size());
    auto rec = [&](auto&& self, std::size_t i, bool uses_new) -> void {
      if (i == t.vars.size()) {
        if (!uses_new) return;
        std::map<std::string, ObjectRef> refs;
        for (std::size_t k = 0; k < t.vars.size(); ++k) refs[t.vars[k].name] = ObjectRef{chosen[k], t.vars[k].type};
        RuleInstance inst = instantiate(t, refs);
        if (just_index_.count(inst.id)) return;
        add_instance(t, inst);
        created.push_back(inst.id);
        return;
      }
      auto it = objects_by_type_.find(t.vars[i].type);
      if (it == objects_by_type_.end()) return;
      for (const std::string& cand : it->second) {
        if (std::find(chosen.begin(), chosen.begin() + static_cast<long>(i), cand) != chosen.begin() + static_cast<long>(i)) {
          continue;
        }
        chosen[i] = cand;
        self(self, i + 1, uses_new || cand == id);
      }
    };
    rec(rec, 0, false);
  }
  if (!created.empty()) restructure();
  return created;
}

void Engine::restructure() {
  DependencyGraph g;
  g.node_count = nodes_.size();
  for (NodeId n = 0; n < nodes_.size(); ++n) {
    if (nodes_[n].kind != NodeKind::Justification) continue;
    const JustData& d = just(n);
    for (const GroundPremise& gp : d.premises) {
      if (gp.kind != GroundPremise::Kind::Call) g.arcs.push_back({gp.wff, n, gp.kind == GroundPremise::Kind::Nm});
    }
    g.arcs.push_back({n, d.conclusion, false});
  }
  std::vector<NmLoop> found;
  try {
    found = find_loops(g);
  } catch (const MonotonicCycleError& e) {
    std::vector<std::string> path;
    for (NodeId n : e.cycle()) path.push_back(node_id(n));
    throw EngineError("monotonic cycle in ground network: " + format_cycle(path));
  }
  auto order = condensed_topo_order(g, found);

  std::vector<LoopData> old = std::move(loops_);
  loops_.clear();
  for (Node& n : nodes_) n.loop = -1;
  for (const NmLoop& l : found) {
    LoopData d;
    d.nodes = l.members;
    for (NodeId m : l.members) {
      (nodes_[m].kind == NodeKind::Wff ? d.wffs : d.rules).push_back(m);
      nodes_[m].loop = static_cast<int>(loops_.size());
    }
    for (LoopData& o : old) {
      if (o.nodes == d.nodes) d.report = o.report;
    }
    loops_.push_back(std::move(d));
  }
  std::vector<std::size_t> first_pos(loops_.size(), SIZE_MAX);
  for (std::size_t i = 0; i < order.size(); ++i) {
    Node& n = nodes_[order[i]];
    if (n.loop < 0) {
      n.topo_pos = i;
    } else {
      auto& fp = first_pos[static_cast<std::size_t>(n.loop)];
      if (fp == SIZE_MAX) fp = i;
      n.topo_pos = fp;
    }
  }
  next_topo_ = nodes_.size();
  for (const LoopData& l : loops_) {
    bool any = std::any_of(l.nodes.begin(), l.nodes.end(), [&](NodeId m) { return nodes_[m].dirty; });
    if (!any) continue;
    for (NodeId m : l.nodes) {
      if (!nodes_[m].dirty) mark_dirty(m);
    }
  }
}

void Engine::mark_dirty(NodeId start) {
  std::vector<NodeId> stack{start};
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    Node& n = nodes_[x];
    if (n.dirty) continue;
    n.dirty = true;
    dirty_list_.push_back(x);
    for (NodeId c : n.children) stack.push_back(c);
    if (n.loop >= 0) {
      for (NodeId m : loops_[static_cast<std::size_t>(n.loop)].nodes) stack.push_back(m);
    }
  }
  if (dirty_list_.size() > 2 * nodes_.size() + 64) {
    std::erase_if(dirty_list_, [&](NodeId x) { return !nodes_[x].dirty; });
    std::sort(dirty_list_.begin(), dirty_list_.end());
    dirty_list_.erase(std::unique(dirty_list_.begin(), dirty_list_.end()), dirty_list_.end());
  }
}

Validity Engine::classify(const WffData& w, Interval v) const {
  if (is_conflict(v)) return Validity::Inconsistent;
  if (v.ignorance() >= w.ignorance_threshold) return Validity::Ignorant;
  return Validity::Valid;
}

Interval Engine::published(const WffData& w, Interval derived) const {
  if (options_.defaults_enabled && w.default_spec && derived.ignorance() >= w.default_spec->theta) {
    return w.default_spec->interval;
  }
  return derived;
}

void Engine::commit_wff(NodeId n, Interval derived, std::vector<double> support) {
  WffData& w = wff(n);
  Interval v = published(w, derived);
  if (w.default_spec) w.default_spec->active = options_.defaults_enabled && derived.ignorance() >= w.default_spec->theta;
  if (!(v == w.value)) {
    w.timestamp = clock_;
    changed_.push_back(w.id);
  }
  w.value = v;
  w.derived = derived;
  w.validity = classify(w, v);
  w.support = std::move(support);
}

void Engine::apply_input(NodeId n) {
  WffData& w = wff(n);
  commit_wff(n, w.evidence.value_or(Interval::unknown()), {});
  nodes_[n].dirty = false;
}

double Engine::call_value(const GroundCall& c) {
  if (options_.memoize_predicates) {
    if (auto it = memo_.find(c.key); it != memo_.end()) return it->second;
  }
  PredicateEnv env{objects_, meta_};
  double v = 0.0;
  if (timing_) {
    auto start = Clock::now();
    v = predicates_.call(c.predicate, env, c.args);
    double us = micros_since(start);
    predicate_micros_ += us;
    timing_(CostKind::Predicate, c.predicate, us);
  } else {
    v = predicates_.call(c.predicate, env, c.args);
  }
  if (options_.memoize_predicates) memo_[c.key] = v;
  return v;
}

bool Engine::applicable(const JustData& j) {
  for (std::size_t i = j.context_begin; i < j.calls.size(); ++i) {
    if (call_value(j.calls[i]) <= 0.0) return false;
  }
  return true;
}

Engine::JustValue Engine::eval_justification(const JustData& j, const WffLookup& value_of) {
  JustValue out;
  out.applicable = applicable(j);
  if (!out.applicable) return out;
  const RuleTemplate& t = *j.info.rule;
  std::vector<double> lbs{t.sufficiency}, rfs{t.necessity};
  for (const GroundPremise& p : j.premises) {
    double lb = 0.0, rf = 0.0;
    if (p.kind == GroundPremise::Kind::Call) {
      lb = call_value(j.calls[p.call]);
      rf = 1.0 - lb;
    } else {
      Interval v = value_of(p.wff);
      switch (p.kind) {
        case GroundPremise::Kind::Wff:
          lb = v.lb;
          rf = 1.0 - v.ub;
          break;
        case GroundPremise::Kind::Negated:
          lb = 1.0 - v.ub;
          rf = v.lb;
          break;
        case GroundPremise::Kind::Test:
          lb = test_value(p.test, p.threshold, v);
          rf = 1.0 - lb;
          break;
        case GroundPremise::Kind::Nm:
          lb = nm_antecedent(v.lb, p.alpha);
          rf = 1.0 - lb;
          break;
        case GroundPremise::Kind::Call: break;
      }
    }
    lbs.push_back(lb);
    rfs.push_back(rf);
  }
  out.label = tnorm_n(t.family, lbs);
  out.refutation = t.necessity == 0.0 ? 0.0 : tnorm_n(t.family, rfs);
  return out;
}

Interval Engine::eval_wff(const WffData& w, const Node& n, const JustLookup& label_of,
                          std::vector<double>* support) const {
  std::vector<double> labels, refs;
  labels.reserve(n.parents.size());
  refs.reserve(n.parents.size());
  for (NodeId j : n.parents) {
    auto [l, r] = label_of(j);
    labels.push_back(l);
    refs.push_back(r);
  }
  Interval v{tconorm_n(w.aggregation, labels), 1.0 - tconorm_n(w.aggregation, refs)};
  if (support) *support = std::move(labels);
  return v;
}

void Engine::recompute_node(NodeId n) {
  Node& node = nodes_[n];
  ++node.recomputes;
  ++total_recomputes_;
  if (node.kind == NodeKind::Justification) {
    JustData& j = just(n);
    WffLookup committed = [this](NodeId w) { return value(w); };
    JustValue v;
    if (timing_) {
      double before = predicate_micros_;
      auto start = Clock::now();
      v = eval_justification(j, committed);
      double us = micros_since(start) - (predicate_micros_ - before);
      timing_(CostKind::Rule, j.info.rule->name, std::max(0.0, us));
    } else {
      v = eval_justification(j, committed);
    }
    j.label = v.label;
    j.refutation = v.refutation;
    j.applicable = v.applicable;
    node.dirty = false;
    return;
  }
  WffData& w = wff(n);
  if (w.input) {
    apply_input(n);
    return;
  }
  std::vector<double> support;
  JustLookup labels = [this](NodeId j) { return std::pair{just(j).label, just(j).refutation}; };
  Interval derived = eval_wff(w, node, labels, &support);
  commit_wff(n, derived, std::move(support));
  node.dirty = false;
}

Engine::LoopOutcome Engine::eval_loop(const LoopData& l, const WffLookup& value_of, const JustLookup& label_of) {
  LoopProblem p;
  std::map<NodeId, std::uint32_t> member;
  for (NodeId w : l.wffs) {
    member[w] = static_cast<std::uint32_t>(p.wff_ids.size());
    p.wff_ids.push_back(wff(w).id);
    p.aggregation.push_back(wff(w).aggregation);
  }
  std::set<NodeId> loop_rules(l.rules.begin(), l.rules.end());
  p.boundary_labels.resize(l.wffs.size());
  p.boundary_refutations.resize(l.wffs.size());
  for (NodeId w : l.wffs) {
    for (NodeId j : nodes_[w].parents) {
      if (loop_rules.count(j)) continue;
      auto [lb, rf] = label_of(j);
      p.boundary_labels[member[w]].push_back(lb);
      p.boundary_refutations[member[w]].push_back(rf);
    }
  }
  for (NodeId jn : l.rules) {
    const JustData& j = just(jn);
    const RuleTemplate& t = *j.info.rule;
    LoopRule r;
    r.id = j.info.id;
    r.family = t.family;
    r.sufficiency = t.sufficiency;
    r.necessity = t.necessity;
    r.applicable = applicable(j);
    r.conclusion = member.at(j.conclusion);
    for (const GroundPremise& gp : j.premises) {
      LoopPremise lp;
      if (gp.kind == GroundPremise::Kind::Call) {
        double v = call_value(j.calls[gp.call]);
        lp.fixed = {v, v};
        r.premises.push_back(lp);
        continue;
      }
      auto m = member.find(gp.wff);
      if (m != member.end()) {
        lp.member = m->second;
        lp.test = gp.test;
        lp.threshold = gp.threshold;
        lp.alpha = gp.alpha;
        switch (gp.kind) {
          case GroundPremise::Kind::Wff: lp.kind = LoopPremise::Kind::Member; break;
          case GroundPremise::Kind::Negated: lp.kind = LoopPremise::Kind::NegatedMember; break;
          case GroundPremise::Kind::Test: lp.kind = LoopPremise::Kind::TestMember; break;
          case GroundPremise::Kind::Nm: lp.kind = LoopPremise::Kind::NmMember; break;
          case GroundPremise::Kind::Call: break;
        }
      } else {
        Interval v = value_of(gp.wff);
        switch (gp.kind) {
          case GroundPremise::Kind::Wff: lp.fixed = v; break;
          case GroundPremise::Kind::Negated: lp.fixed = v.negation(); break;
          case GroundPremise::Kind::Test: {
            double x = test_value(gp.test, gp.threshold, v);
            lp.fixed = {x, x};
            break;
          }
          case GroundPremise::Kind::Nm: {
            double x = nm_antecedent(v.lb, gp.alpha);
            lp.fixed = {x, x};
            break;
          }
          case GroundPremise::Kind::Call: break;
        }
      }
      r.premises.push_back(lp);
    }
    p.rules.push_back(std::move(r));
  }

  LoopOutcome out;
  try {
    out.extensions = enumerate_extensions(p, options_.nm_cap);
  } catch (const LoopTooLargeError& e) {
    throw EngineError(e.what());
  }
  if (out.extensions.empty()) {
    out.values.assign(l.wffs.size(), Interval::unknown());
    out.labels.assign(l.rules.size(), {0.0, 0.0});
    return out;
  }
  const Extension& best = select_extension(out.extensions, p);
  out.chosen = static_cast<int>(&best - out.extensions.data());
  out.values = best.values;
  for (std::size_t i = 0; i < l.rules.size(); ++i) out.labels.emplace_back(best.rule_labels[i], best.rule_refutations[i]);
  return out;
}

void Engine::recompute_loop(int li) {
  LoopData& l = loops_[static_cast<std::size_t>(li)];
  WffLookup values = [this](NodeId w) { return value(w); };
  JustLookup labels = [this](NodeId j) { return std::pair{just(j).label, just(j).refutation}; };
  LoopOutcome out = eval_loop(l, values, labels);
  for (std::size_t i = 0; i < l.rules.size(); ++i) {
    JustData& j = just(l.rules[i]);
    j.label = out.labels[i].first;
    j.refutation = out.labels[i].second;
    j.applicable = applicable(j);
    ++nodes_[l.rules[i]].recomputes;
    ++total_recomputes_;
    nodes_[l.rules[i]].dirty = false;
  }
  for (std::size_t i = 0; i < l.wffs.size(); ++i) {
    NodeId w = l.wffs[i];
    std::vector<double> support;
    for (NodeId j : nodes_[w].parents) support.push_back(just(j).label);
    commit_wff(w, out.values[i], std::move(support));
    ++nodes_[w].recomputes;
    ++total_recomputes_;
    nodes_[w].dirty = false;
  }
  l.report.members.clear();
  for (NodeId w : l.wffs) l.report.members.push_back(wff(w).id);
  l.report.extensions = std::move(out.extensions);
  l.report.chosen = out.chosen;
  l.report.anomaly = l.report.extensions.empty();
}

NodeId Engine::unit_of(NodeId n) const {
  int l = nodes_[n].loop;
  return l < 0 ? n : loops_[static_cast<std::size_t>(l)].nodes.front();
}

void Engine::recompute_unit(NodeId unit) {
  int l = nodes_[unit].loop;
  if (l >= 0) {
    recompute_loop(l);
  } else {
    recompute_node(unit);
  }
}

void Engine::recompute_units(std::vector<NodeId> work) {
  for (NodeId& n : work) n = unit_of(n);
  std::sort(work.begin(), work.end(), [&](NodeId a, NodeId b) {
    return nodes_[a].topo_pos != nodes_[b].topo_pos ? nodes_[a].topo_pos < nodes_[b].topo_pos : a < b;
  });
  work.erase(std::unique(work.begin(), work.end()), work.end());
  for (NodeId u : work) {
    if (nodes_[u].dirty) recompute_unit(u);
  }
}

std::vector<std::string> Engine::propagate() {
  begin_cycle();
  changed_.clear();
  std::vector<NodeId> work;
  for (NodeId n : dirty_list_) {
    if (nodes_[n].dirty) work.push_back(n);
  }
  dirty_list_.clear();
  recompute_units(std::move(work));
  std::vector<std::string> out = std::move(changed_);
  changed_.clear();
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<NodeId> Engine::dirty_cone(NodeId goal) const {
  std::vector<NodeId> out;
  if (!nodes_[goal].dirty) return out;
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<NodeId> stack{goal};
  seen[goal] = true;
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    out.push_back(x);
    auto visit = [&](NodeId y) {
      if (!seen[y] && nodes_[y].dirty) {
        seen[y] = true;
        stack.push_back(y);
      }
    };
    for (NodeId p : nodes_[x].parents) visit(p);
    if (nodes_[x].loop >= 0) {
      for (NodeId m : loops_[static_cast<std::size_t>(nodes_[x].loop)].nodes) visit(m);
    }
  }
  return out;
}

std::optional<NodeId> Engine::find(const std::string& id) const {
  if (auto it = wff_index_.find(id); it != wff_index_.end()) return it->second;
  if (auto it = just_index_.find(id); it != just_index_.end()) return it->second;
  return std::nullopt;
}

const std::string& Engine::node_id(NodeId n) const {
  return nodes_[n].kind == NodeKind::Wff ? wff(n).id : just(n).info.id;
}

const JustificationInfo& Engine::justification(NodeId n) const {
  if (nodes_[n].kind != NodeKind::Justification) throw EngineError(node_id(n) + " is not a justification");
  return just(n).info;
}

std::pair<Interval, Validity> Engine::query(const std::string& id) {
  bool negated = !id.empty() && id[0] == '~';
  std::string base = negated ? id.substr(1) : id;
  auto n = find(base);
  if (!n || nodes_[*n].kind != NodeKind::Wff) throw EngineError("unknown wff " + id);
  if (nodes_[*n].dirty) {
    begin_cycle();
    recompute_units(dirty_cone(*n));
    changed_.clear();
  }
  const WffData& w = wff(*n);
  return {negated ? w.value.negation() : w.value, w.validity};
}

NodeState Engine::state(const std::string& id) const {
  auto n = find(id);
  if (!n || nodes_[*n].kind != NodeKind::Wff) throw EngineError("unknown wff " + id);
  const WffData& w = wff(*n);
  return NodeState{w.value, nodes_[*n].dirty ? Validity::Unreliable : w.validity, w.timestamp, w.support};
}

std::optional<NodeId> Engine::input_node_for(const std::string& id, bool create) {
  if (auto n = find(id)) {
    if (nodes_[*n].kind != NodeKind::Wff || !wff(*n).input) throw EngineError("wff " + id + " is not an input");
    return n;
  }
  auto key = parse_wff_id(id);
  if (!key) throw EngineError("malformed wff id '" + id + "'");
  std::string sig = key->signature();
  if (net_->kb.concludes(sig)) throw EngineError("wff " + id + " is not an input");
  if (!input_signatures_.count(sig)) return std::nullopt;
  if (!create) return std::nullopt;
  return wff_node(*key);
}

bool Engine::is_input(const std::string& id) const {
  if (auto n = find(id)) return nodes_[*n].kind == NodeKind::Wff && wff(*n).input;
  auto key = parse_wff_id(id);
  return key && input_signatures_.count(key->signature()) > 0;
}

ChangeSet Engine::assert_batch(std::span<const Evidence> batch) {
  std::vector<NodeId> targets;
  for (const Evidence& e : batch) {
    check_interval(e.wff, e.interval);
    auto n = input_node_for(e.wff, true);
    if (!n) throw EngineError("unknown wff " + e.wff);
    targets.push_back(*n);
  }
  ChangeSet cs;
  std::size_t before = dirty_list_.size();
  bool bumped = false;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    WffData& w = wff(targets[i]);
    if (w.evidence && *w.evidence == batch[i].interval) continue;
    if (!bumped) {
      ++clock_;
      bumped = true;
    }
    w.evidence = batch[i].interval;
    apply_input(targets[i]);
    for (NodeId c : nodes_[targets[i]].children) mark_dirty(c);
    cs.changed_inputs.push_back(w.id);
  }
  changed_.clear();
  cs.invalidated = dirty_list_.size() >= before ? dirty_list_.size() - before : 0;
  return cs;
}

ChangeSet Engine::assert_evidence(const std::string& id, Interval interval) {
  Evidence e{id, interval};
  return assert_batch(std::span<const Evidence>(&e, 1));
}

ChangeSet Engine::retract_evidence(const std::string& id) {
  auto n = input_node_for(id, false);
  ChangeSet cs;
  if (!n) return cs;
  WffData& w = wff(*n);
  if (!w.evidence) return cs;
  ++clock_;
  w.evidence.reset();
  apply_input(*n);
  for (NodeId c : nodes_[*n].children) mark_dirty(c);
  changed_.clear();
  cs.changed_inputs.push_back(w.id);
  return cs;
}

void Engine::set_attribute(const std::string& object, const std::string& name, const std::string& value) {
  auto it = objects_.find(object);
  if (it == objects_.end()) throw EngineError("unknown object " + object);
  auto& attrs = it->second.attributes;
  if (auto a = attrs.find(name); a != attrs.end() && a->second == value) return;
  attrs[name] = value;
  ++clock_;
  if (auto c = object_calls_.find(object); c != object_calls_.end()) {
    for (NodeId j : c->second) mark_dirty(j);
  }
}

void Engine::set_meta(const std::string& name, double value) {
  if (auto it = meta_.find(name); it != meta_.end() && it->second == value) return;
  meta_[name] = value;
  ++clock_;
  for (NodeId n = 0; n < nodes_.size(); ++n) {
    if (nodes_[n].kind == NodeKind::Justification && just(n).reads_meta) mark_dirty(n);
  }
}

void Engine::register_default(DefaultSpec spec) {
  auto n = find(spec.wff);
  if (!n || nodes_[*n].kind != NodeKind::Wff) throw EngineError("unknown wff " + spec.wff);
  check_interval(spec.wff, spec.interval);
  if (spec.theta < 0.0 || spec.theta > 1.0) throw EngineError("default threshold outside [0,1]");
  WffData& w = wff(*n);
  if (w.default_spec) throw EngineError("duplicate default on " + spec.wff);
  spec.active = false;
  w.default_spec = spec;
  if (w.input && !nodes_[*n].dirty) {
    apply_input(*n);
    for (NodeId c : nodes_[*n].children) mark_dirty(c);
    changed_.clear();
  } else {
    mark_dirty(*n);
  }
}

std::optional<DefaultSpec> Engine::default_for(const std::string& id) const {
  auto n = find(id);
  if (!n || nodes_[*n].kind != NodeKind::Wff) throw EngineError("unknown wff " + id);
  return wff(*n).default_spec;
}

bool Engine::evaluate_context(const std::string& instance) {
  auto it = just_index_.find(instance);
  if (it == just_index_.end()) throw EngineError("unknown rule instance " + instance);
  return applicable(just(it->second));
}

std::pair<double, double> Engine::arc_label(const std::string& instance) const {
  auto it = just_index_.find(instance);
  if (it == just_index_.end()) throw EngineError("unknown rule instance " + instance);
  const JustData& j = just(it->second);
  return {j.label, j.refutation};
}

void Engine::invalidate_all() {
  for (NodeId n = 0; n < nodes_.size(); ++n) mark_dirty(n);
}

std::vector<std::string> Engine::wff_ids() const {
  std::vector<std::string> out;
  for (const WffData& w : wffs_) out.push_back(w.id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> Engine::instance_ids() const {
  std::vector<std::string> out;
  for (const JustData& j : justs_) out.push_back(j.info.id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<LoopReport> Engine::loop_reports() const {
  std::vector<LoopReport> out;
  for (const LoopData& l : loops_) out.push_back(l.report);
  return out;
}

void Engine::reset_counters() {
  for (Node& n : nodes_) n.recomputes = 0;
  total_recomputes_ = 0;
}

void Engine::sample_justification(NodeId n) {
  if (nodes_[n].kind != NodeKind::Justification) throw EngineError(node_id(n) + " is not a justification");
  begin_cycle();
  const JustData& j = just(n);
  WffLookup committed = [this](NodeId w) { return value(w); };
  double before = predicate_micros_;
  auto start = Clock::now();
  eval_justification(j, committed);
  double us = micros_since(start) - (predicate_micros_ - before);
  if (timing_) timing_(CostKind::Rule, j.info.rule->name, std::max(0.0, us));
}

std::vector<NodeId> Engine::ancestors(NodeId goal) const {
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<NodeId> stack{goal}, out;
  seen[goal] = true;
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    out.push_back(x);
    for (NodeId p : nodes_[x].parents) {
      if (!seen[p]) {
        seen[p] = true;
        stack.push_back(p);
      }
    }
  }
  std::sort(out.begin(), out.end(), [&](NodeId a, NodeId b) {
    return nodes_[a].topo_pos != nodes_[b].topo_pos ? nodes_[a].topo_pos < nodes_[b].topo_pos : a < b;
  });
  return out;
}

std::vector<NodeId> Engine::descendants(NodeId start) const {
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<NodeId> stack{start}, out;
  seen[start] = true;
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    out.push_back(x);
    for (NodeId c : nodes_[x].children) {
      if (!seen[c]) {
        seen[c] = true;
        stack.push_back(c);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeId> Engine::pending_units(NodeId goal) const {
  std::vector<NodeId> units;
  for (NodeId n : dirty_cone(goal)) units.push_back(unit_of(n));
  std::sort(units.begin(), units.end(), [&](NodeId a, NodeId b) {
    return nodes_[a].topo_pos != nodes_[b].topo_pos ? nodes_[a].topo_pos < nodes_[b].topo_pos : a < b;
  });
  units.erase(std::unique(units.begin(), units.end()), units.end());
  return units;
}

std::vector<NodeId> Engine::pending_units() const {
  std::vector<NodeId> units;
  for (NodeId n = 0; n < nodes_.size(); ++n) {
    if (nodes_[n].dirty) units.push_back(unit_of(n));
  }
  std::sort(units.begin(), units.end(), [&](NodeId a, NodeId b) {
    return nodes_[a].topo_pos != nodes_[b].topo_pos ? nodes_[a].topo_pos < nodes_[b].topo_pos : a < b;
  });
  units.erase(std::unique(units.begin(), units.end()), units.end());
  return units;
}

bool Engine::ready(NodeId unit) const {
  int l = nodes_[unit].loop;
  auto parents_clean = [&](NodeId n) {
    return std::all_of(nodes_[n].parents.begin(), nodes_[n].parents.end(), [&](NodeId p) {
      return !nodes_[p].dirty || (l >= 0 && nodes_[p].loop == l);
    });
  };
  if (l < 0) return parents_clean(unit);
  const auto& ns = loops_[static_cast<std::size_t>(l)].nodes;
  return std::all_of(ns.begin(), ns.end(), parents_clean);
}

Interval Engine::scratch_evaluate(NodeId goal, const std::map<NodeId, Interval>* overrides,
                                  const std::set<NodeId>* fired, bool recompute_clean) {
  std::unordered_map<NodeId, Interval> sw;
  std::unordered_map<NodeId, std::pair<double, double>> sj;
  WffLookup value_of = [&](NodeId w) {
    auto it = sw.find(w);
    return it != sw.end() ? it->second : value(w);
  };
  JustLookup label_of = [&](NodeId j) {
    auto it = sj.find(j);
    return it != sj.end() ? it->second : std::pair{just(j).label, just(j).refutation};
  };
  std::set<int> loops_done;
  for (NodeId n : ancestors(goal)) {
    if (!recompute_clean && !nodes_[n].dirty) continue;
    const Node& node = nodes_[n];
    if (node.loop >= 0) {
      if (!loops_done.insert(node.loop).second) continue;
      const LoopData& l = loops_[static_cast<std::size_t>(node.loop)];
      if (fired && !fired->count(unit_of(n))) {
        for (NodeId w : l.wffs) sw[w] = published(wff(w), Interval::unknown());
        for (NodeId j : l.rules) sj[j] = {0.0, 0.0};
        continue;
      }
      LoopOutcome out = eval_loop(l, value_of, label_of);
      for (std::size_t i = 0; i < l.rules.size(); ++i) sj[l.rules[i]] = out.labels[i];
      for (std::size_t i = 0; i < l.wffs.size(); ++i) sw[l.wffs[i]] = published(wff(l.wffs[i]), out.values[i]);
      continue;
    }
    if (node.kind == NodeKind::Justification) {
      if (fired && !fired->count(n)) {
        sj[n] = {0.0, 0.0};
      } else {
        JustValue v = eval_justification(just(n), value_of);
        sj[n] = {v.label, v.refutation};
      }
      continue;
    }
    const WffData& w = wff(n);
    Interval derived;
    if (w.input) {
      auto o = overrides ? overrides->find(n) : std::map<NodeId, Interval>::const_iterator{};
      derived = overrides && o != overrides->end() ? o->second : w.evidence.value_or(Interval::unknown());
    } else {
      derived = eval_wff(w, node, label_of);
    }
    sw[n] = published(w, derived);
  }
  return value_of(goal);
}

Interval Engine::evaluate_partial(NodeId goal, const std::set<NodeId>& fired) {
  return scratch_evaluate(goal, nullptr, &fired, false);
}

Interval Engine::evaluate_with_overrides(NodeId goal, const std::map<NodeId, Interval>& overrides) {
  return scratch_evaluate(goal, &overrides, nullptr, true);
}

ReplayStats replay(Engine& engine, const TrackFile& track, const std::function<void(double)>& after_phase,
                   bool propagate) {
  ReplayStats stats;
  const auto& recs = track.records;
  std::size_t i = 0;
  while (i < recs.size()) {
    double t = recs[i].t;
    std::vector<Evidence> batch;
    for (; i < recs.size() && recs[i].t == t; ++i) {
      const TrackRecord& r = recs[i];
      ++stats.records;
      if (r.variable == "type") {
        if (!engine.has_object(r.object)) engine.create_object(r.object, r.value);
        continue;
      }
      if (r.object != "-" && engine.has_object(r.object) && r.lb >= 0.5) {
        engine.set_attribute(r.object, r.variable, r.value);
      }
      std::string id = r.wff().id();
      if (engine.is_input(id)) {
        // Later records for the same wff at the same time replace earlier ones.
        auto same = std::find_if(batch.begin(), batch.end(), [&](const Evidence& e) { return e.wff == id; });
        if (same != batch.end()) {
          same->interval = {r.lb, r.ub};
        } else {
          batch.push_back({id, {r.lb, r.ub}});
        }
        ++stats.evidence;
      } else {
        ++stats.skipped;
      }
    }
    engine.assert_batch(batch);
    if (propagate) engine.propagate();
    ++stats.phases;
    if (after_phase) after_phase(t);
  }
  return stats;
}

}  // namespace prk

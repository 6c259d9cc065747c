#include <sstream>

#include "prk/engine.hpp"

namespace prk {

namespace {

constexpr std::size_t kTraceNodeBudget = 20000;

std::string interval_text(Interval v) { return "(" + format_number(v.lb) + " " + format_number(v.ub) + ")"; }

void render(const TraceNode& t, int depth, std::ostringstream& os) {
  os << std::string(static_cast<std::size_t>(depth) * 2, ' ');
  switch (t.kind) {
    case TraceNode::Kind::Wff:
    case TraceNode::Kind::Loop:
      os << "(wff " << quote_if_needed(t.id) << " :interval " << interval_text(t.interval) << " :validity "
         << to_string(t.validity);
      if (t.support == "default") {
        os << " :support \"default (theta=" << format_number(t.theta) << ")\"";
      } else {
        os << " :support " << t.support;
      }
      if (!t.premise_role.empty()) os << " :role " << t.premise_role;
      if (t.support == "loop") {
        os << " :extensions " << t.extension_count;
        if (t.extension_count > 0) os << " :chosen " << t.chosen_extension;
      }
      break;
    case TraceNode::Kind::Justification:
      os << "(rule " << t.rule << " :instance " << quote_if_needed(t.id) << " :label " << format_number(t.label)
         << " :refutation " << format_number(t.refutation) << " :s " << format_number(t.sufficiency) << " :n "
         << format_number(t.necessity) << " :tnorm " << to_string(t.family);
      if (!t.applicable) os << " :inert";
      if (t.dominant) os << " :dominant";
      break;
    case TraceNode::Kind::Call:
      os << "(call " << quote_if_needed(t.id) << " :value " << format_number(t.interval.lb);
      break;
  }
  for (const TraceNode& c : t.children) {
    os << "\n";
    render(c, depth + 1, os);
  }
  os << ")";
}

}  // namespace

std::string render_trace(const TraceNode& t) {
  std::ostringstream os;
  render(t, 0, os);
  os << "\n";
  return os.str();
}

TraceNode Engine::explain(const std::string& id) {
  query(id);
  NodeId n = *find(id);
  std::set<NodeId> path;
  std::size_t budget = kTraceNodeBudget;
  return trace(n, path, budget);
}

TraceNode Engine::trace(NodeId n, std::set<NodeId>& path, std::size_t& budget) {
  TraceNode t;
  if (budget > 0) --budget;
  const Node& node = nodes_[n];
  if (node.kind == NodeKind::Justification) {
    const JustData& j = just(n);
    const RuleTemplate& r = *j.info.rule;
    t.kind = TraceNode::Kind::Justification;
    t.id = j.info.id;
    t.rule = r.name;
    t.label = j.label;
    t.refutation = j.refutation;
    t.sufficiency = r.sufficiency;
    t.necessity = r.necessity;
    t.family = r.family;
    t.applicable = j.applicable;
    for (const GroundPremise& gp : j.premises) {
      if (gp.kind == GroundPremise::Kind::Call) {
        TraceNode c;
        c.kind = TraceNode::Kind::Call;
        const GroundCall& call = j.calls[gp.call];
        c.id = call.key;
        auto it = memo_.find(call.key);
        double v = it != memo_.end() ? it->second : call_value(call);
        c.interval = {v, v};
        c.premise_role = "call";
        t.children.push_back(std::move(c));
        continue;
      }
      TraceNode c = trace(gp.wff, path, budget);
      switch (gp.kind) {
        case GroundPremise::Kind::Wff: c.premise_role = "premise"; break;
        case GroundPremise::Kind::Negated: c.premise_role = "not"; break;
        case GroundPremise::Kind::Test: c.premise_role = "test"; break;
        case GroundPremise::Kind::Nm: c.premise_role = "nm"; break;
        case GroundPremise::Kind::Call: break;
      }
      t.children.push_back(std::move(c));
    }
    return t;
  }

  const WffData& w = wff(n);
  t.kind = TraceNode::Kind::Wff;
  t.id = w.id;
  t.interval = w.value;
  t.validity = node.dirty ? Validity::Unreliable : w.validity;
  if (w.default_spec && w.default_spec->active) {
    t.support = "default";
    t.theta = w.default_spec->theta;
  } else if (w.input) {
    t.support = w.evidence ? "evidence" : "none";
  } else if (node.loop >= 0) {
    t.support = "loop";
    const LoopReport& rep = loops_[static_cast<std::size_t>(node.loop)].report;
    t.extension_count = rep.extensions.size();
    t.chosen_extension = rep.chosen < 0 ? 0 : static_cast<std::size_t>(rep.chosen);
  } else {
    t.support = node.parents.empty() ? "none" : "rules";
  }
  if (path.count(n)) {
    t.support = "cycle";
    return t;
  }
  if (budget == 0) {
    t.support = "truncated";
    return t;
  }
  path.insert(n);
  double best = 0.0;
  std::size_t dominant = SIZE_MAX;
  for (NodeId j : node.parents) {
    TraceNode c = trace(j, path, budget);
    if (c.label > best) {
      best = c.label;
      dominant = t.children.size();
    }
    t.children.push_back(std::move(c));
  }
  if (dominant != SIZE_MAX) t.children[dominant].dominant = true;
  path.erase(n);
  return t;
}

}  // namespace prk

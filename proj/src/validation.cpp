#include "prk/validation.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "prk/sexpr.hpp"

namespace prk {

const LabelMapping* LabelMap::find(const std::string& variable) const {
  for (const LabelMapping& m : mappings) {
    if (m.variable == variable) return &m;
  }
  return nullptr;
}

LabelMap parse_label_map(std::string_view text) {
  LabelMap map;
  try {
    for (const Sexpr& f : read_sexprs(text)) {
      if (!f.is_list() || f.size() < 2 || !f[0].is_atom()) f.fail("expected (threshold x) or (map ...)");
      if (f[0].is_atom("threshold")) {
        if (f.size() != 2) f.fail("(threshold x)");
        map.threshold = f[1].number();
        if (map.threshold < 0 || map.threshold > 1) f[1].fail("threshold outside [0,1]");
      } else if (f[0].is_atom("map")) {
        KeywordArgs kw(f, 1);
        kw.reject_unknown({":value", ":label"});
        if (kw.positional().size() != 1 || !kw.positional()[0]->is_atom()) f.fail("(map VARIABLE :label LABEL)");
        LabelMapping m;
        m.variable = kw.positional()[0]->text;
        if (auto* v = kw.get(":value")) m.value = v->text;
        m.label = kw.require(":label").text;
        if (map.find(m.variable)) f.fail("duplicate mapping for " + m.variable);
        map.mappings.push_back(std::move(m));
      } else {
        f[0].fail("unknown form");
      }
    }
  } catch (const ParseError& e) {
    throw MappingError("label map " + std::to_string(e.pos().line) + ":" + std::to_string(e.pos().column) + ": " +
                       e.message());
  }
  return map;
}

std::vector<std::string> dominant_rules(const TraceNode& trace) {
  std::vector<std::string> out;
  const TraceNode* n = &trace;
  std::set<const TraceNode*> seen;
  while (n && seen.insert(n).second) {
    const TraceNode* next = nullptr;
    if (n->kind == TraceNode::Kind::Wff) {
      for (const TraceNode& c : n->children) {
        if (c.kind == TraceNode::Kind::Justification && c.dominant) next = &c;
      }
      if (next) out.push_back(next->rule);
      n = next;
      continue;
    }
    // Descend into the strongest derived premise.
    for (const TraceNode& c : n->children) {
      if (c.kind != TraceNode::Kind::Wff || c.support != "rules") continue;
      if (!next || c.interval.lb > next->interval.lb) next = &c;
    }
    n = next;
  }
  return out;
}

ValidationReport validate(const CompiledNetwork& net, const TrackFile& track, const GroundTruth& truth,
                          const LabelMap& map, const PredicateRegistry& predicates,
                          const std::vector<std::string>& goals) {
  std::vector<const LabelMapping*> chosen;
  if (goals.empty()) {
    for (const LabelMapping& m : map.mappings) chosen.push_back(&m);
  } else {
    for (const std::string& g : goals) {
      const LabelMapping* m = map.find(g);
      if (!m) throw MappingError("goal " + g + " has no mapped label");
      chosen.push_back(m);
    }
  }
  for (const LabelMapping* m : chosen) {
    if (!truth.has_label(m->label)) throw MappingError("label " + m->label + " does not occur in the ground truth");
  }
  std::set<std::string> objects;
  for (const TruthState& s : truth.states) objects.insert(s.object);

  ValidationReport report;
  report.scenario = truth.scenario;
  report.threshold = map.threshold;
  struct Row {
    GoalReport r;
    std::optional<double> decisive;
  };
  std::vector<Row> rows;
  for (const LabelMapping* m : chosen) {
    for (const std::string& o : objects) {
      Row row;
      row.r.goal = WffKey{m->variable, {o}, m->value}.id();
      row.r.object = o;
      row.r.label = m->label;
      rows.push_back(std::move(row));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.r.goal < b.r.goal; });

  Engine engine(net, predicates);
  std::map<std::string, std::vector<std::string>> dominant_at_first;
  replay(engine, track, [&](double t) {
    ++report.phases;
    int step = static_cast<int>(t);
    for (Row& row : rows) {
      GoalReport& g = row.r;
      Interval v = Interval::unknown();
      if (engine.find(g.goal)) v = engine.query(g.goal).first;
      g.final_interval = v;
      bool believed = v.lb >= map.threshold;
      std::optional<bool> actual = truth.label(step, g.object, g.label);
      bool truth_v = actual.value_or(false);
      ++g.phases;
      if (believed == truth_v) ++g.agree;
      if (believed && !g.first_believed) {
        g.first_believed = t;
        g.dominant = dominant_rules(engine.explain(g.goal));
      }
      if (truth_v && !g.first_true) g.first_true = t;
    }
  });
  for (Row& row : rows) {
    if (!row.r.first_believed && engine.find(row.r.goal)) row.r.dominant = dominant_rules(engine.explain(row.r.goal));
    report.goals.push_back(std::move(row.r));
  }
  return report;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : "none"; }

}  // namespace

std::string ValidationReport::format_records() const {
  std::ostringstream os;
  os << "(validation :scenario " << (scenario.empty() ? "-" : quote_if_needed(scenario)) << " :threshold "
     << format_number(threshold) << " :phases " << phases << " :goals " << goals.size() << ")\n";
  for (const GoalReport& g : goals) {
    os << "(goal " << quote_if_needed(g.goal) << " :label " << g.label << " :first-believed " << opt(g.first_believed)
       << " :first-true " << opt(g.first_true) << " :agree " << g.agree << " :phases " << g.phases << " :final ("
       << format_number(g.final_interval.lb) << " " << format_number(g.final_interval.ub) << ") :dominant (";
    for (std::size_t i = 0; i < g.dominant.size(); ++i) os << (i ? " " : "") << g.dominant[i];
    os << "))\n";
  }
  return os.str();
}

std::string ValidationReport::format_text() const {
  std::ostringstream os;
  os << "scenario " << (scenario.empty() ? "-" : scenario) << ": " << phases << " phases, threshold "
     << format_number(threshold) << "\n";
  for (const GoalReport& g : goals) {
    os << "  " << g.goal << " vs " << g.label << ": agree " << g.agree << "/" << g.phases << ", believed from "
       << opt(g.first_believed) << ", true from " << opt(g.first_true);
    if (!g.dominant.empty()) {
      os << ", via";
      for (const std::string& r : g.dominant) os << " " << r;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace prk

#include "prk/profiler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace prk {

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of no samples");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("percentile of no samples");
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

const TimingEntry* TimingTable::find(CostKind kind, const std::string& name) const {
  auto it = entries.find({kind, name});
  return it == entries.end() ? nullptr : &it->second;
}

double TimingTable::cost(CostKind kind, const std::string& name) const {
  const TimingEntry* e = find(kind, name);
  return e ? e->cost_us : default_cost_us;
}

TimingTable profile(const CompiledNetwork& net, const TrackFile& track, const PredicateRegistry& predicates,
                    const ProfileOptions& options, const std::string& track_id) {
  const std::size_t wanted = options.samples + options.warmup;
  std::map<std::pair<CostKind, std::string>, std::vector<double>> samples;
  Engine engine(net, predicates);
  engine.set_timing_sink([&](CostKind kind, const std::string& key, double us) { samples[{kind, key}].push_back(us); });
  replay(engine, track);

  std::map<std::string, std::vector<NodeId>> instances;
  std::map<std::string, std::vector<NodeId>> callers;
  for (NodeId n = 0; n < engine.node_count(); ++n) {
    if (engine.kind(n) != NodeKind::Justification) continue;
    const JustificationInfo& info = engine.justification(n);
    instances[info.rule->name].push_back(n);
    for (const std::string& p : info.predicates) callers[p].push_back(n);
  }
  auto top_up = [&](std::pair<CostKind, std::string> key, const std::vector<NodeId>& nodes) {
    if (nodes.empty()) return;
    // A caller may stop at a false context before reaching the predicate; give up after a bounded number of tries.
    for (std::size_t tries = 0, i = 0; samples[key].size() < wanted && tries < 20 * wanted + 100; ++tries, ++i) {
      engine.sample_justification(nodes[i % nodes.size()]);
    }
  };
  for (const RuleTemplate& t : net.kb.templates) top_up({CostKind::Rule, t.name}, instances[t.name]);
  for (const auto& [name, arity] : net.kb.predicates) top_up({CostKind::Predicate, name}, callers[name]);

  TimingTable table;
  table.track_id = track_id;
  table.sample_count = options.samples;
  std::vector<double> measured_costs;
  auto make = [&](CostKind kind, const std::string& name) {
    TimingEntry e{kind, name, 0.0, 0, false, {}};
    auto it = samples.find({kind, name});
    if (it != samples.end() && it->second.size() > options.warmup) {
      std::size_t end = std::min(it->second.size(), wanted);
      e.raw.assign(it->second.begin() + static_cast<long>(options.warmup), it->second.begin() + static_cast<long>(end));
      e.samples = e.raw.size();
      e.cost_us = median(e.raw);
      e.measured = true;
      measured_costs.push_back(e.cost_us);
    }
    table.entries[{kind, name}] = std::move(e);
  };
  for (const RuleTemplate& t : net.kb.templates) make(CostKind::Rule, t.name);
  for (const auto& [name, arity] : net.kb.predicates) make(CostKind::Predicate, name);
  table.default_cost_us = measured_costs.empty() ? 1.0 : percentile(measured_costs, 90.0);
  for (auto& [k, e] : table.entries) {
    if (!e.measured) e.cost_us = table.default_cost_us;
  }
  return table;
}

std::string write_timing(const TimingTable& t) {
  std::ostringstream os;
  os << "RKT1\n";
  os << "track " << (t.track_id.empty() ? "-" : quote_if_needed(t.track_id)) << "\n";
  os << "samples " << t.sample_count << "\n";
  os << "default-cost " << format_number(t.default_cost_us) << "\n";
  for (const auto& [k, e] : t.entries) {
    os << (e.kind == CostKind::Rule ? "rule " : "predicate ") << e.name << " " << format_number(e.cost_us) << " "
       << e.samples << " " << (e.measured ? "measured" : "unmeasured") << "\n";
  }
  return os.str();
}

TimingTable read_timing(std::string_view text) {
  TimingTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  auto fail = [&](const std::string& m) -> void {
    throw std::runtime_error("timing table line " + std::to_string(n) + ": " + m);
  };
  auto num = [&](const std::string& s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v < 0) fail("expected a non-negative number, got '" + s + "'");
    return v;
  };
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == ';') continue;
    if (!header) {
      if (line != "RKT1") fail("expected header RKT1");
      header = true;
      continue;
    }
    std::istringstream f(line);
    std::string head;
    f >> head;
    if (head == "track") {
      std::string rest;
      std::getline(f >> std::ws, rest);
      try {
        t.track_id = read_sexpr(rest).text;
      } catch (const ParseError& e) {
        fail("bad track id: " + e.message());
      }
      if (t.track_id == "-") t.track_id.clear();
    } else if (head == "samples") {
      std::string v;
      f >> v;
      t.sample_count = static_cast<std::size_t>(num(v));
    } else if (head == "default-cost") {
      std::string v;
      f >> v;
      t.default_cost_us = num(v);
    } else if (head == "rule" || head == "predicate") {
      std::string name, cost, count, flag;
      if (!(f >> name >> cost >> count >> flag)) fail("expected '<kind> <name> <cost> <samples> <flag>'");
      if (flag != "measured" && flag != "unmeasured") fail("bad flag " + flag);
      TimingEntry e{head == "rule" ? CostKind::Rule : CostKind::Predicate, name, num(cost),
                    static_cast<std::size_t>(num(count)), flag == "measured", {}};
      t.entries[{e.kind, name}] = std::move(e);
    } else {
      fail("unknown record " + head);
    }
  }
  if (!header) throw std::runtime_error("timing table has no RKT1 header");
  return t;
}

}  // namespace prk

// prk: check, compile, profile, run, simulate and validate rule networks.
//
// Exit codes: 0 success, 1 I/O or usage error, 2 knowledge-base or input
// content error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "prk/compiler.hpp"
#include "prk/executive.hpp"
#include "prk/network_io.hpp"
#include "prk/profiler.hpp"
#include "prk/scenario.hpp"
#include "prk/validation.hpp"

namespace {

using namespace prk;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  // Write to a sibling temp file first so a failed run never leaves a partial output.
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("cannot write " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path + ": " + ec.message());
}

std::string describe(const ParseError& e) {
  std::string msg = std::to_string(e.pos().line) + ":" + std::to_string(e.pos().column) + ": " + e.message();
  if (!e.token().empty()) msg += " at '" + e.token() + "'";
  return msg;
}

KnowledgeBase load_kb(const std::string& path) {
  std::string text = read_file(path);
  try {
    return parse_kb(text);
  } catch (const ParseError& e) {
    throw ContentError(path + ":" + describe(e));
  }
}

/// Accepts a compiled `.rkn` or a `.rkb` source.
CompiledNetwork load_any(const std::string& path) {
  std::string bytes = read_file(path);
  try {
    if (bytes.rfind("RKN", 0) == 0) return load_network(bytes);
    return compile(parse_kb(bytes));
  } catch (const ParseError& e) {
    throw ContentError(path + ":" + describe(e));
  } catch (const NetworkError& e) {
    throw ContentError(path + ": " + e.what());
  } catch (const CycleError& e) {
    throw ContentError(path + ": monotonic cycle: " + format_cycle(e.path()));
  }
}

TrackFile load_track(const std::string& path) {
  try {
    return read_track(read_file(path));
  } catch (const TrackError& e) {
    throw ContentError(path + ": " + e.what());
  }
}

struct Common {
  std::string format = "text";
  bool records() const { return format == "records"; }
};

void add_format(CLI::App* cmd, Common& c) {
  cmd->add_option("--format", c.format, "Output style")->check(CLI::IsMember({"records", "text"}));
}

int cmd_check(const std::string& kb_path, const Common& c) {
  KnowledgeBase kb = load_kb(kb_path);
  try {
    CompiledNetwork net = compile(kb);
    const RuleGraph& g = net.graph;
    if (c.records()) {
      std::cout << "(check :status ok :templates " << kb.templates.size() << " :or-nodes " << g.or_nodes().size()
                << " :and-nodes " << g.and_nodes().size() << " :nodes " << g.nodes.size() << " :arcs "
                << g.arcs.size() << " :nm-loops " << g.nm_loops.size() << ")\n";
    } else {
      std::cout << kb_path << ": ok, " << kb.templates.size() << " rule templates, " << g.nodes.size() << " nodes ("
                << g.or_nodes().size() << " wff, " << g.and_nodes().size() << " rule), " << g.arcs.size()
                << " arcs, " << g.nm_loops.size() << " non-monotonic loops\n";
    }
    return 0;
  } catch (const CycleError& e) {
    if (c.records()) {
      std::cout << "(check :status cycle :path " << quote_if_needed(format_cycle(e.path())) << ")\n";
    } else {
      std::cout << kb_path << ": monotonic cycle: " << format_cycle(e.path()) << "\n";
    }
    return 2;
  } catch (const NetworkError& e) {
    throw ContentError(kb_path + ": " + e.what());
  }
}

int cmd_compile(const std::string& kb_path, const std::string& out, bool print_topo, const Common& c) {
  KnowledgeBase kb = load_kb(kb_path);
  CompiledNetwork net;
  std::string bytes;
  try {
    net = compile(kb);
    bytes = emit_network(net.graph, net.kb);
  } catch (const CycleError& e) {
    throw ContentError(kb_path + ": monotonic cycle: " + format_cycle(e.path()));
  } catch (const NetworkError& e) {
    throw ContentError(kb_path + ": " + e.what());
  }
  write_file(out, bytes);
  if (print_topo) {
    for (std::size_t i = 0; i < net.graph.topo_order.size(); ++i) {
      const GraphNode& n = net.graph.nodes[net.graph.topo_order[i]];
      const char* kind = n.kind == GraphNodeKind::Wff ? "wff" : "rule";
      if (c.records()) {
        std::cout << "(topo " << i << " " << kind << " " << quote_if_needed(n.key) << ")\n";
      } else {
        std::cout << i << " " << kind << " " << n.key << "\n";
      }
    }
  }
  if (c.records()) {
    std::cout << "(compile :status ok :out " << quote_if_needed(out) << " :bytes " << bytes.size() << " :kb-hash "
              << net.kb_hash << ")\n";
  } else {
    std::cout << "wrote " << out << " (" << bytes.size() << " bytes)\n";
  }
  return 0;
}

int cmd_profile(const std::string& net_path, const std::string& track_path, const std::string& out,
                std::size_t samples, std::size_t warmup, const Common& c) {
  CompiledNetwork net = load_any(net_path);
  TrackFile track = load_track(track_path);
  TimingTable t = profile(net, track, PredicateRegistry::with_builtins(), {samples, warmup},
                          std::filesystem::path(track_path).filename().string());
  write_file(out, write_timing(t));
  std::size_t measured = 0;
  for (const auto& [k, e] : t.entries) measured += e.measured;
  if (c.records()) {
    std::cout << "(profile :status ok :out " << quote_if_needed(out) << " :entries " << t.entries.size()
              << " :measured " << measured << " :samples " << t.sample_count << " :default-cost "
              << format_number(t.default_cost_us) << ")\n";
  } else {
    std::cout << "wrote " << out << ": " << measured << "/" << t.entries.size() << " entries measured, "
              << t.sample_count << " samples each\n";
  }
  return 0;
}

struct RunArgs {
  std::string net;
  std::string track;
  std::string timing;
  std::string tasks;
  std::vector<std::string> queries;
  double budget = 0.0;
  int priority = 0;
  double deadline_ms = 0.0;
  std::vector<std::string> scope;
  std::string mode = "coverage";
  bool virtual_clock = false;
  bool lazy_replay = false;
  bool explain = false;
};

int cmd_run(const RunArgs& a, const Common& c) {
  CompiledNetwork net = load_any(a.net);
  TimingTable timing;
  timing.default_cost_us = 1.0;
  if (!a.timing.empty()) {
    try {
      timing = read_timing(read_file(a.timing));
    } catch (const IoError&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw ContentError(a.timing + ": " + e.what());
    }
  }
  Engine engine(net);
  ReplayStats stats;
  if (!a.track.empty()) stats = replay(engine, load_track(a.track), {}, !a.lazy_replay);

  VirtualClock vclock;
  RealClock rclock;
  TimeSource& clock = a.virtual_clock ? static_cast<TimeSource&>(vclock) : rclock;
  ExecutiveOptions eo;
  eo.mode = a.mode == "certainty" ? PlanMode::Certainty : PlanMode::Coverage;
  eo.explain = a.explain;
  Executive exec(engine, timing, clock, eo);

  std::vector<Task> tasks;
  if (!a.tasks.empty()) {
    try {
      tasks = parse_tasks(read_file(a.tasks), clock.now_us());
    } catch (const ParseError& e) {
      throw ContentError(a.tasks + ":" + describe(e));
    }
  }
  for (const std::string& q : a.queries) {
    Task t;
    t.kind = TaskKind::Backward;
    t.goal = q;
    t.priority = a.priority;
    if (a.deadline_ms > 0) t.deadline_us = clock.now_us() + a.deadline_ms * 1000.0;
    if (a.budget > 0) t.budget_us = a.budget;
    if (!a.scope.empty()) {
      std::vector<ClassPath> s;
      for (const std::string& p : a.scope) s.push_back(parse_class_path(p));
      t.scope = std::move(s);
    }
    tasks.push_back(std::move(t));
  }
  for (Task& t : tasks) {
    if (!t.budget_us && a.budget > 0 && t.kind == TaskKind::Backward) t.budget_us = a.budget;
    exec.submit(std::move(t));
  }
  exec.run_until_idle();
  if (c.records()) {
    std::cout << "(replay :records " << stats.records << " :evidence " << stats.evidence << " :phases "
              << stats.phases << " :lazy " << (a.lazy_replay ? "true" : "false") << ")\n";
  }
  int failures = 0;
  for (const TaskResult& r : exec.results().drain()) {
    failures += r.status == TaskStatus::Failed;
    std::cout << (c.records() ? format_result_record(r) : format_result_text(r)) << "\n";
    if (!r.trace.empty()) std::cout << r.trace << (r.trace.back() == '\n' ? "" : "\n");
  }
  return failures ? 2 : 0;
}

int cmd_simulate(const std::string& scenario, const std::string& track_out, const std::string& truth_out,
                 const Common& c) {
  Scenario s;
  try {
    s = parse_scenario(read_file(scenario));
  } catch (const ScenarioError& e) {
    throw ContentError(scenario + ": " + e.what());
  }
  ScenarioOutput out = run_scenario(s);
  write_file(track_out, write_track(out.track));
  write_file(truth_out, write_truth(out.truth));
  if (c.records()) {
    std::cout << "(simulate :status ok :scenario " << quote_if_needed(s.name) << " :steps " << s.steps
              << " :records " << out.track.records.size() << " :states " << out.truth.states.size() << ")\n";
  } else {
    std::cout << "simulated " << s.name << ": " << s.steps << " steps, " << out.track.records.size()
              << " track records\n";
  }
  return 0;
}

int cmd_validate(const std::string& net_path, const std::string& track_path, const std::string& truth_path,
                 const std::string& map_path, const std::vector<std::string>& goals, const Common& c) {
  CompiledNetwork net = load_any(net_path);
  TrackFile track = load_track(track_path);
  GroundTruth truth;
  LabelMap map;
  try {
    truth = read_truth(read_file(truth_path));
    map = parse_label_map(read_file(map_path));
  } catch (const ScenarioError& e) {
    throw ContentError(truth_path + ": " + e.what());
  }
  ValidationReport r = validate(net, track, truth, map, PredicateRegistry::with_builtins(), goals);
  std::cout << (c.records() ? r.format_records() : r.format_text());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plausible-reasoning rule network toolkit"};
  app.require_subcommand(1);
  Common common;

  std::string kb_path, out_path, net_path, track_path, truth_path, map_path, scenario_path;
  bool print_topo = false;
  std::size_t samples = 30, warmup = 3;
  RunArgs run;
  std::vector<std::string> goals;

  auto* check = app.add_subcommand("check", "Parse a KB and report graph size or a monotonic cycle");
  check->add_option("kb", kb_path, "Knowledge base (.rkb)")->required();
  add_format(check, common);

  auto* comp = app.add_subcommand("compile", "Compile a KB into a .rkn network");
  comp->add_option("kb", kb_path, "Knowledge base (.rkb)")->required();
  comp->add_option("-o,--out", out_path, "Output network")->required();
  comp->add_flag("--print-topo", print_topo, "List the topological order");
  add_format(comp, common);

  auto* prof = app.add_subcommand("profile", "Measure rule and predicate costs by replaying a track");
  prof->add_option("net", net_path, "Network (.rkn or .rkb)")->required();
  prof->add_option("--track", track_path, "Track file (.rtf)")->required();
  prof->add_option("-o,--out", out_path, "Output timing table (.rkt)")->required();
  prof->add_option("--samples", samples, "Samples kept per entry")->check(CLI::PositiveNumber);
  prof->add_option("--warmup", warmup, "Samples discarded first");
  add_format(prof, common);

  auto* runc = app.add_subcommand("run", "Replay evidence and execute queries and tasks");
  runc->add_option("net", run.net, "Network (.rkn or .rkb)")->required();
  runc->add_option("--track", run.track, "Track file replayed before the tasks");
  runc->add_option("--timing", run.timing, "Timing table (.rkt)");
  runc->add_option("--tasks", run.tasks, "Tasks file");
  runc->add_option("--query", run.queries, "Goal wff to query (repeatable)");
  runc->add_option("--budget", run.budget, "Planning budget in microseconds")->check(CLI::PositiveNumber);
  runc->add_option("--priority", run.priority, "Priority of --query tasks");
  runc->add_option("--deadline", run.deadline_ms, "Deadline of --query tasks, ms from start")
      ->check(CLI::PositiveNumber);
  runc->add_option("--scope", run.scope, "Rule classes a/b allowed for --query tasks");
  runc->add_option("--mode", run.mode, "Plan objective")->check(CLI::IsMember({"coverage", "certainty"}));
  runc->add_flag("--virtual-clock", run.virtual_clock, "Advance time by estimated unit costs");
  runc->add_flag("--lazy-replay", run.lazy_replay, "Assert track evidence without propagating");
  runc->add_flag("--explain", run.explain, "Append a proof trace to each answer");
  add_format(runc, common);

  auto* sim = app.add_subcommand("simulate", "Run a scenario into a track and ground truth");
  sim->add_option("scenario", scenario_path, "Scenario (.rsc)")->required();
  sim->add_option("--track", track_path, "Output track (.rtf)")->required();
  sim->add_option("--truth", truth_path, "Output ground truth (.rgt)")->required();
  add_format(sim, common);

  auto* val = app.add_subcommand("validate", "Score a network's conclusions against ground truth");
  val->add_option("net", net_path, "Network (.rkn or .rkb)")->required();
  val->add_option("--track", track_path, "Track file (.rtf)")->required();
  val->add_option("--truth", truth_path, "Ground truth (.rgt)")->required();
  val->add_option("--map", map_path, "Label map (.rmap)")->required();
  val->add_option("--goal", goals, "Goal variable to score (repeatable)");
  add_format(val, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "prk: error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*check) return cmd_check(kb_path, common);
    if (*comp) return cmd_compile(kb_path, out_path, print_topo, common);
    if (*prof) return cmd_profile(net_path, track_path, out_path, samples, warmup, common);
    if (*runc) return cmd_run(run, common);
    if (*sim) return cmd_simulate(scenario_path, track_path, truth_path, common);
    if (*val) return cmd_validate(net_path, track_path, truth_path, map_path, goals, common);
  } catch (const IoError& e) {
    std::cerr << "prk: error: " << e.what() << "\n";
    return 1;
  } catch (const ContentError& e) {
    std::cerr << "prk: error: " << e.what() << "\n";
    return 2;
  } catch (const MappingError& e) {
    std::cerr << "prk: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "prk: error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

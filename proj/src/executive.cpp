#include "prk/executive.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "prk/sexpr.hpp"

namespace prk {

std::string_view to_string(TaskKind k) { return k == TaskKind::Backward ? "query" : "evidence"; }

std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::Queued: return "queued";
    case TaskStatus::Running: return "running";
    case TaskStatus::Done: return "done";
    case TaskStatus::Expired: return "expired";
    case TaskStatus::Preempted: return "preempted";
    case TaskStatus::Failed: return "failed";
  }
  return "?";
}

std::string format_result_record(const TaskResult& r) {
  std::ostringstream os;
  os << "(result :task " << quote_if_needed(r.task) << " :kind " << to_string(r.kind) << " :status "
     << to_string(r.status);
  if (!r.goal.empty()) os << " :goal " << quote_if_needed(r.goal);
  if (r.interval) {
    os << " :interval (" << format_number(r.interval->lb) << " " << format_number(r.interval->ub) << ")"
       << " :validity " << to_string(r.validity);
  }
  if (r.partial) os << " :partial true";
  os << " :elapsed-us " << format_number(std::round(r.elapsed_us * 1000.0) / 1000.0) << " :units " << r.units
     << " :preemptions " << r.preemptions;
  if (!r.plan.empty()) os << " :plan " << quote_if_needed(r.plan);
  if (!r.warning.empty()) os << " :warning " << quote_if_needed(r.warning);
  if (!r.error.empty()) os << " :error " << quote_if_needed(r.error);
  if (r.kind == TaskKind::Forward) {
    os << " :changed (";
    for (std::size_t i = 0; i < r.changed.size(); ++i) os << (i ? " " : "") << r.changed[i];
    os << ")";
  }
  os << ")";
  return os.str();
}

std::string format_result_text(const TaskResult& r) {
  std::ostringstream os;
  os << r.task << " " << to_string(r.status);
  if (!r.goal.empty()) os << " " << r.goal;
  if (r.interval) {
    os << " [" << format_number(r.interval->lb) << ", " << format_number(r.interval->ub) << "] "
       << to_string(r.validity);
  }
  if (r.partial) os << " (partial)";
  if (!r.plan.empty()) os << " plan " << r.plan;
  if (!r.warning.empty()) os << " warning: " << r.warning;
  if (!r.error.empty()) os << " error: " << r.error;
  if (r.kind == TaskKind::Forward) os << " changed " << r.changed.size();
  return os.str();
}

double RealClock::now_us() const {
  return std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start_).count();
}

void VirtualClock::advance(double us) {
  double cur = now_.load();
  while (!now_.compare_exchange_weak(cur, cur + us)) {
  }
}

void ResultStream::push(TaskResult r) {
  {
    std::lock_guard lock(mu_);
    items_.push_back(std::move(r));
  }
  cv_.notify_one();
}

std::optional<TaskResult> ResultStream::pop() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !items_.empty() || closed_; });
  if (items_.empty()) return std::nullopt;
  TaskResult r = std::move(items_.front());
  items_.pop_front();
  return r;
}

std::optional<TaskResult> ResultStream::try_pop() {
  std::lock_guard lock(mu_);
  if (items_.empty()) return std::nullopt;
  TaskResult r = std::move(items_.front());
  items_.pop_front();
  return r;
}

std::vector<TaskResult> ResultStream::drain() {
  std::lock_guard lock(mu_);
  std::vector<TaskResult> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
  items_.clear();
  return out;
}

void ResultStream::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool ResultStream::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

bool Agenda::before(const Task& a, const Task& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.deadline_us != b.deadline_us) return a.deadline_us < b.deadline_us;
  return a.seq < b.seq;
}

namespace {
// std heap functions keep the largest element on top; "largest" is the task that runs first.
bool heap_less(const Task& a, const Task& b) { return Agenda::before(b, a); }
}  // namespace

bool Agenda::push(Task task, double now_us) {
  if (!(task.deadline_us > now_us)) return false;
  {
    std::lock_guard lock(mu_);
    task.seq = next_seq_++;
    task.status = TaskStatus::Queued;
    heap_.push_back(std::move(task));
    std::push_heap(heap_.begin(), heap_.end(), heap_less);
  }
  cv_.notify_one();
  return true;
}

void Agenda::requeue(Task task) {
  {
    std::lock_guard lock(mu_);
    task.status = TaskStatus::Preempted;
    heap_.push_back(std::move(task));
    std::push_heap(heap_.begin(), heap_.end(), heap_less);
  }
  cv_.notify_one();
}

std::optional<Task> Agenda::pop() {
  std::lock_guard lock(mu_);
  if (heap_.empty()) return std::nullopt;
  std::pop_heap(heap_.begin(), heap_.end(), heap_less);
  Task t = std::move(heap_.back());
  heap_.pop_back();
  return t;
}

std::optional<Task> Agenda::wait_pop() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !heap_.empty() || shutdown_; });
  if (heap_.empty()) return std::nullopt;
  std::pop_heap(heap_.begin(), heap_.end(), heap_less);
  Task t = std::move(heap_.back());
  heap_.pop_back();
  return t;
}

std::optional<int> Agenda::top_priority() const {
  std::lock_guard lock(mu_);
  if (heap_.empty()) return std::nullopt;
  return heap_.front().priority;
}

std::size_t Agenda::size() const {
  std::lock_guard lock(mu_);
  return heap_.size();
}

std::vector<Task> Agenda::snapshot() const {
  std::lock_guard lock(mu_);
  std::vector<Task> out = heap_;
  std::sort(out.begin(), out.end(), before);
  return out;
}

void Agenda::shutdown() {
  {
    std::lock_guard lock(mu_);
    shutdown_ = true;
  }
  cv_.notify_all();
}

void Agenda::reset_shutdown() {
  std::lock_guard lock(mu_);
  shutdown_ = false;
}

Executive::Executive(Engine& engine, TimingTable timing, TimeSource& clock, ExecutiveOptions options)
    : engine_(engine), timing_(std::move(timing)), clock_(clock), options_(std::move(options)) {}

Executive::~Executive() { stop(); }

std::string Executive::submit(Task task) {
  if (task.id.empty()) {
    std::lock_guard lock(log_mu_);
    task.id = "task" + std::to_string(next_id_++);
  }
  std::string id = task.id;
  Task copy = task;
  if (!agenda_.push(std::move(task), clock_.now_us())) {
    TaskResult r;
    r.task = id;
    r.kind = copy.kind;
    r.goal = copy.goal;
    r.status = TaskStatus::Expired;
    r.error = "deadline already passed at submission";
    results_.push(std::move(r));
  }
  return id;
}

void Executive::run_until_idle() {
  while (auto t = agenda_.pop()) run_one(std::move(*t));
}

void Executive::start() {
  if (running_.exchange(true)) return;
  agenda_.reset_shutdown();
  worker_ = std::thread([this] {
    while (running_) {
      auto t = agenda_.wait_pop();
      if (!t) break;
      run_one(std::move(*t));
    }
  });
}

void Executive::stop() {
  if (!running_.exchange(false)) return;
  agenda_.shutdown();
  if (worker_.joinable()) worker_.join();
}

std::vector<std::string> Executive::execution_log() const {
  std::lock_guard lock(log_mu_);
  return log_;
}

std::optional<std::set<std::string>> Executive::scope_of(const Task& t) const {
  if (!t.scope) return std::nullopt;
  return scope_rules(engine_.kb(), *t.scope);
}

double Executive::unit_cost(NodeId unit) const {
  std::vector<NodeId> rules;
  if (engine_.loop_of(unit) >= 0) {
    for (NodeId m : engine_.loop_nodes(engine_.loop_of(unit))) {
      if (engine_.kind(m) == NodeKind::Justification) rules.push_back(m);
    }
  } else if (engine_.kind(unit) == NodeKind::Justification) {
    rules.push_back(unit);
  }
  double c = 0.0;
  for (NodeId r : rules) {
    const JustificationInfo& info = engine_.justification(r);
    c += timing_.cost(CostKind::Rule, info.rule->name);
    for (const std::string& p : info.predicates) c += timing_.cost(CostKind::Predicate, p);
  }
  return c;
}

bool Executive::should_preempt(const Task& t) {
  if (hook_) hook_(t, boundary_);
  ++boundary_;
  auto top = agenda_.top_priority();
  return top && *top > t.priority;
}

void Executive::best_so_far(const Task& t, NodeId goal, bool negated, TaskResult& r) {
  (void)t;
  Interval v = engine_.evaluate_partial(goal, {});
  r.interval = negated ? v.negation() : v;
  r.validity = engine_.dirty(goal) ? Validity::Unreliable : engine_.state(engine_.node_id(goal)).validity;
  r.partial = engine_.dirty(goal);
}

void Executive::finish(Task& t, TaskResult& r) {
  r.elapsed_us = clock_.now_us() - t.start_us;
  r.units = t.units;
  r.preemptions = t.preemptions;
  results_.push(std::move(r));
}

void Executive::run_one(Task task) {
  TaskResult r;
  r.task = task.id;
  r.kind = task.kind;
  r.goal = task.goal;
  double now = clock_.now_us();
  if (now >= task.deadline_us && !task.started) {
    r.status = TaskStatus::Expired;
    r.error = "deadline passed while queued";
    results_.push(std::move(r));
    return;
  }
  {
    std::lock_guard lock(log_mu_);
    log_.push_back(task.id);
  }
  if (!task.started) {
    task.started = true;
    task.start_us = now;
  }
  task.status = TaskStatus::Running;
  Outcome out = Outcome::Finished;
  try {
    out = task.kind == TaskKind::Backward ? run_backward(task, r) : run_forward(task, r);
  } catch (const std::exception& e) {
    r.status = TaskStatus::Failed;
    r.error = e.what();
    r.interval.reset();
  }
  if (out == Outcome::Preempted) {
    ++task.preemptions;
    agenda_.requeue(std::move(task));
    return;
  }
  finish(task, r);
}

Executive::Outcome Executive::run_backward(Task& t, TaskResult& r) {
  bool negated = !t.goal.empty() && t.goal[0] == '~';
  std::string base = negated ? t.goal.substr(1) : t.goal;
  auto found = engine_.find(base);
  if (!found || engine_.kind(*found) != NodeKind::Wff) throw EngineError("unknown wff " + base);
  NodeId goal = *found;

  double now = clock_.now_us();
  if (now >= t.deadline_us) {
    best_so_far(t, goal, negated, r);
    r.status = TaskStatus::Expired;
    return Outcome::Finished;
  }
  engine_.begin_cycle();
  double budget = t.budget_us ? *t.budget_us
                  : options_.default_budget_us ? *options_.default_budget_us
                  : std::isfinite(t.deadline_us) ? t.deadline_us - now
                                                 : 1e15;
  budget = std::max(budget, 1e-6);
  PlanOptions po;
  po.mode = options_.mode;
  po.scope = scope_of(t);
  PathPlan p = plan(engine_, goal, budget, timing_, po);
  r.plan = p.summary();
  r.warning = p.warning;

  for (NodeId u : engine_.pending_units(goal)) {
    if (!engine_.dirty(u)) continue;
    bool wff_unit = engine_.loop_of(u) < 0 && engine_.kind(u) == NodeKind::Wff;
    if (!wff_unit && !p.fired.count(u)) continue;
    if (!engine_.ready(u)) continue;
    if (should_preempt(t)) return Outcome::Preempted;
    double cost = unit_cost(u);
    if (clock_.now_us() + cost > t.deadline_us) {
      best_so_far(t, goal, negated, r);
      r.status = TaskStatus::Expired;
      return Outcome::Finished;
    }
    engine_.recompute_unit(u);
    clock_.charge(cost);
    ++t.units;
  }

  if (!engine_.dirty(goal)) {
    NodeState s = engine_.state(base);
    r.interval = negated ? s.interval.negation() : s.interval;
    r.validity = s.validity;
  } else {
    Interval v = engine_.evaluate_partial(goal, p.fired);
    r.interval = negated ? v.negation() : v;
    r.validity = Validity::Unreliable;
    r.partial = true;
  }
  r.status = TaskStatus::Done;
  if (options_.explain) r.trace = render_trace(engine_.explain(base));
  return Outcome::Finished;
}

Executive::Outcome Executive::run_forward(Task& t, TaskResult& r) {
  if (!t.asserted) {
    ChangeSet cs = engine_.assert_batch(t.evidence);
    t.asserted = true;
    r.changed = cs.changed_inputs;
    engine_.begin_cycle();
  }
  auto scope = scope_of(t);
  auto in_scope = [&](NodeId u) {
    if (!scope) return true;
    std::vector<NodeId> members;
    if (engine_.loop_of(u) >= 0) {
      members = engine_.loop_nodes(engine_.loop_of(u));
    } else {
      members = {u};
    }
    for (NodeId m : members) {
      if (engine_.kind(m) == NodeKind::Justification && !scope->count(engine_.justification(m).rule->name)) {
        return false;
      }
    }
    return true;
  };
  for (NodeId u : engine_.pending_units()) {
    if (!engine_.dirty(u) || !in_scope(u) || !engine_.ready(u)) continue;
    if (should_preempt(t)) return Outcome::Preempted;
    double cost = unit_cost(u);
    if (clock_.now_us() + cost > t.deadline_us) {
      r.status = TaskStatus::Expired;
      r.partial = true;
      return Outcome::Finished;
    }
    Interval before{};
    bool is_wff = engine_.kind(u) == NodeKind::Wff && engine_.loop_of(u) < 0;
    if (is_wff) before = engine_.state(engine_.node_id(u)).interval;
    engine_.recompute_unit(u);
    clock_.charge(cost);
    ++t.units;
    if (is_wff) {
      Interval after = engine_.state(engine_.node_id(u)).interval;
      if (after.lb != before.lb || after.ub != before.ub) r.changed.push_back(engine_.node_id(u));
    }
  }
  std::sort(r.changed.begin(), r.changed.end());
  r.changed.erase(std::unique(r.changed.begin(), r.changed.end()), r.changed.end());
  r.status = TaskStatus::Done;
  return Outcome::Finished;
}

double iso8601_offset_us(std::string_view text) {
  std::string s(text);
  std::tm tm{};
  std::istringstream in(s);
  in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
  if (in.fail()) throw std::invalid_argument("bad ISO-8601 time '" + s + "'");
  double frac = 0.0;
  if (in.peek() == '.') {
    std::string digits;
    in.get();
    while (std::isdigit(in.peek())) digits.push_back(static_cast<char>(in.get()));
    if (!digits.empty()) frac = std::stod("0." + digits);
  }
  if (in.peek() == 'Z') in.get();
  if (in.peek() != std::char_traits<char>::eof()) throw std::invalid_argument("bad ISO-8601 time '" + s + "'");
  std::time_t secs = timegm(&tm);
  double now_s = std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
  return (static_cast<double>(secs) + frac - now_s) * 1e6;
}

std::vector<Task> parse_tasks(std::string_view text, double now_us) {
  std::vector<Task> out;
  for (const Sexpr& form : read_sexprs(text)) {
    if (!form.is_list() || form.size() < 2 || !form[0].is_atom()) form.fail("expected (query ...) or (evidence ...)");
    Task t;
    const std::string& head = form[0].text;
    KeywordArgs kw(form, 2);
    if (head == "query") {
      t.kind = TaskKind::Backward;
      if (!form[1].is_atom()) form[1].fail("expected a wff id");
      t.goal = form[1].text;
      kw.reject_unknown({":id", ":priority", ":deadline", ":scope", ":budget"});
    } else if (head == "evidence") {
      t.kind = TaskKind::Forward;
      if (!form[1].is_list()) form[1].fail("expected a list of (wff lb ub)");
      for (const Sexpr& e : form[1].items) {
        if (!e.is_list() || e.size() != 3 || !e[0].is_atom()) e.fail("expected (wff lb ub)");
        Interval iv{e[1].number(), e[2].number()};
        if (!(iv.lb >= 0 && iv.ub <= 1 && iv.lb <= iv.ub)) e.fail("invalid interval");
        t.evidence.push_back({e[0].text, iv});
      }
      kw.reject_unknown({":id", ":priority", ":deadline", ":scope"});
    } else {
      form[0].fail("unknown task kind '" + head + "'");
    }
    if (!kw.positional().empty()) kw.positional().front()->fail("unexpected argument");
    if (auto* v = kw.get(":id")) t.id = v->text;
    if (auto* v = kw.get(":priority")) {
      double p = v->number();
      if (p != std::floor(p)) v->fail("priority must be an integer");
      t.priority = static_cast<int>(p);
    }
    if (auto* v = kw.get(":deadline")) {
      if (auto ms = v->try_number(); ms && !v->quoted) {
        t.deadline_us = now_us + *ms * 1000.0;
      } else {
        try {
          t.deadline_us = now_us + iso8601_offset_us(v->text);
        } catch (const std::invalid_argument& e) {
          v->fail(e.what());
        }
      }
    }
    if (auto* v = kw.get(":scope")) {
      std::vector<ClassPath> scope;
      if (v->is_atom()) {
        scope.push_back(parse_class_path(v->text));
      } else {
        for (const Sexpr& c : v->items) scope.push_back(parse_class_path(c.text));
      }
      t.scope = std::move(scope);
    }
    if (auto* v = kw.get(":budget")) {
      t.budget_us = v->number();
      if (!(*t.budget_us > 0)) v->fail("budget must be positive");
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace prk

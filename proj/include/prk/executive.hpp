#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "prk/engine.hpp"
#include "prk/planner.hpp"
#include "prk/profiler.hpp"

namespace prk {

inline constexpr double kNoDeadline = std::numeric_limits<double>::infinity();

enum class TaskKind { Backward, Forward };
enum class TaskStatus { Queued, Running, Done, Expired, Preempted, Failed };
std::string_view to_string(TaskKind k);
std::string_view to_string(TaskStatus s);

struct Task {
  std::string id;
  TaskKind kind = TaskKind::Backward;
  std::string goal;                // backward
  std::vector<Evidence> evidence;  // forward
  int priority = 0;
  double deadline_us = kNoDeadline;  // absolute, on the executive's time source
  std::optional<std::vector<ClassPath>> scope;
  std::optional<double> budget_us;
  TaskStatus status = TaskStatus::Queued;
  std::uint64_t seq = 0;

  // Progress carried across preemptions.
  bool started = false;
  bool asserted = false;
  double start_us = 0.0;
  std::size_t preemptions = 0;
  std::size_t units = 0;
};

struct TaskResult {
  std::string task;
  TaskKind kind = TaskKind::Backward;
  TaskStatus status = TaskStatus::Done;
  std::string goal;
  std::optional<Interval> interval;
  Validity validity = Validity::Unreliable;
  bool partial = false;
  double elapsed_us = 0.0;
  std::size_t units = 0;
  std::size_t preemptions = 0;
  std::string plan;     // PathPlan::summary()
  std::string warning;
  std::string error;
  std::string trace;    // rendered proof trace when explanations are on
  std::vector<std::string> changed;  // forward: wffs whose value changed
};

/// `(result :task q1 :status done ...)` on one line.
std::string format_result_record(const TaskResult& r);
std::string format_result_text(const TaskResult& r);

class TimeSource {
public:
  virtual ~TimeSource() = default;
  virtual double now_us() const = 0;
  /// Called after each executed unit with its estimated cost.
  virtual void charge(double /*us*/) {}
};

class RealClock final : public TimeSource {
public:
  RealClock() : start_(std::chrono::steady_clock::now()) {}
  double now_us() const override;

private:
  std::chrono::steady_clock::time_point start_;
};

/// Deterministic clock advanced only by charged unit costs and explicit calls.
class VirtualClock final : public TimeSource {
public:
  explicit VirtualClock(double start_us = 0.0) : now_(start_us) {}
  double now_us() const override { return now_.load(); }
  void charge(double us) override { advance(us); }
  void advance(double us);
  void set(double us) { now_.store(us); }

private:
  std::atomic<double> now_;
};

/// Multi-producer, multi-consumer FIFO of results.
class ResultStream {
public:
  void push(TaskResult r);
  /// Blocks until a result is available or the stream is closed and empty.
  std::optional<TaskResult> pop();
  std::optional<TaskResult> try_pop();
  std::vector<TaskResult> drain();
  void close();
  bool closed() const;

private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<TaskResult> items_;
  bool closed_ = false;
};

/// Tasks ordered by priority (desc), deadline (asc), submission order.
class Agenda {
public:
  static bool before(const Task& a, const Task& b);

  /// Queues `task`, assigning a sequence number on first submission.  Returns
  /// false if its deadline is not after `now_us`.
  bool push(Task task, double now_us);
  /// Re-queues a preempted task keeping its sequence number.
  void requeue(Task task);
  std::optional<Task> pop();
  /// Blocks until a task is available or shutdown() is called.
  std::optional<Task> wait_pop();
  std::optional<int> top_priority() const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  std::vector<Task> snapshot() const;  // in dequeue order
  void shutdown();
  void reset_shutdown();

private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Task> heap_;
  std::uint64_t next_seq_ = 0;
  bool shutdown_ = false;
};

struct ExecutiveOptions {
  PlanMode mode = PlanMode::Coverage;
  std::optional<double> default_budget_us;  // when a task gives none; else time to deadline
  bool explain = false;
};

/// Runs agenda tasks against one engine.  Only the executing thread touches
/// the engine; submit() and results() are safe from any thread.
class Executive {
public:
  /// Called at every unit boundary of a running task, before interrupt checks.
  using BoundaryHook = std::function<void(const Task& running, std::size_t boundary)>;

  Executive(Engine& engine, TimingTable timing, TimeSource& clock, ExecutiveOptions options = {});
  ~Executive();
  Executive(const Executive&) = delete;
  Executive& operator=(const Executive&) = delete;

  /// Queues a task and returns its id (generated when empty).  A task whose
  /// deadline has passed is reported expired on the result stream and never runs.
  std::string submit(Task task);

  /// Runs tasks on the calling thread until the agenda is empty.
  void run_until_idle();
  /// Starts / stops a worker thread that runs tasks as they arrive.
  void start();
  void stop();

  ResultStream& results() { return results_; }
  const Agenda& agenda() const { return agenda_; }
  void set_boundary_hook(BoundaryHook hook) { hook_ = std::move(hook); }
  /// Ids of tasks in the order they began (or resumed) execution.
  std::vector<std::string> execution_log() const;
  const TimeSource& clock() const { return clock_; }

private:
  enum class Outcome { Finished, Preempted };

  void run_one(Task task);
  Outcome run_backward(Task& t, TaskResult& r);
  Outcome run_forward(Task& t, TaskResult& r);
  bool should_preempt(const Task& t);
  double unit_cost(NodeId unit) const;
  std::optional<std::set<std::string>> scope_of(const Task& t) const;
  void best_so_far(const Task& t, NodeId goal, bool negated, TaskResult& r);
  void finish(Task& t, TaskResult& r);

  Engine& engine_;
  TimingTable timing_;
  TimeSource& clock_;
  ExecutiveOptions options_;
  Agenda agenda_;
  ResultStream results_;
  BoundaryHook hook_;
  std::size_t boundary_ = 0;
  std::uint64_t next_id_ = 0;
  mutable std::mutex log_mu_;
  std::vector<std::string> log_;
  std::thread worker_;
  std::atomic<bool> running_{false};
};

/// Parses a tasks file:
///   (query WFF [:id x] [:priority p] [:deadline ms|"ISO-8601"] [:scope ("a/b" ...)] [:budget us])
///   (evidence ((WFF lb ub) ...) [:id x] [:priority p] [:deadline ...] [:scope ...])
/// Numeric deadlines are milliseconds after `now_us`.
std::vector<Task> parse_tasks(std::string_view text, double now_us);

/// Microseconds from the current wall-clock time to an ISO-8601 UTC instant
/// (`2026-01-02T03:04:05Z`, optional fraction, optional `Z`).
double iso8601_offset_us(std::string_view text);

}  // namespace prk

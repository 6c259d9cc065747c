#include <thread>

#include "doctest.h"
#include "prk/executive.hpp"

using namespace prk;

namespace {

// g <- m <- x, g <- a; every rule costs 5 us on the virtual clock.
const char* kChain = R"(
(class fast)
(class slow)
(rule ra :class fast :premises (a) :sufficiency 0.6 :conclusion g)
(rule rc :class slow :premises (m) :sufficiency 0.8 :conclusion g)
(rule rm :class slow :premises (x) :sufficiency 0.9 :conclusion m)
(rule side :premises (y) :sufficiency 1 :conclusion h)
)";

TimingTable flat(double c) {
  TimingTable t;
  t.default_cost_us = c;
  return t;
}

Task query(const std::string& id, const std::string& goal, int priority = 0, double deadline = kNoDeadline) {
  Task t;
  t.id = id;
  t.goal = goal;
  t.priority = priority;
  t.deadline_us = deadline;
  return t;
}

}  // namespace

TEST_SUITE("executive") {
  TEST_CASE("agenda order: priority, then deadline, then arrival") {
    Agenda a;
    CHECK(a.push(query("late", "g", 1, 50), 0));
    CHECK(a.push(query("urgent", "g", 1, 20), 0));
    CHECK(a.push(query("high", "g", 5), 0));
    CHECK(a.push(query("low", "g", 0), 0));
    CHECK(a.push(query("urgent2", "g", 1, 20), 0));
    CHECK_FALSE(a.push(query("gone", "g", 9, 10), 10));
    CHECK(a.top_priority() == 5);
    std::vector<std::string> ids;
    for (const Task& t : a.snapshot()) ids.push_back(t.id);
    CHECK(ids == std::vector<std::string>{"high", "urgent", "urgent2", "late", "low"});
    ids.clear();
    while (auto t = a.pop()) ids.push_back(t->id);
    CHECK(ids == std::vector<std::string>{"high", "urgent", "urgent2", "late", "low"});
    CHECK(a.empty());
  }

  TEST_CASE("requeued tasks keep their place among equals") {
    Agenda a;
    a.push(query("first", "g"), 0);
    a.push(query("second", "g"), 0);
    Task f = *a.pop();
    a.requeue(f);
    CHECK(a.pop()->id == "first");
  }

  TEST_CASE("clocks and result streams") {
    VirtualClock c(10);
    c.charge(2.5);
    c.advance(1);
    CHECK(c.now_us() == 13.5);
    c.set(0);
    CHECK(c.now_us() == 0);
    RealClock r;
    CHECK(r.now_us() >= 0);

    ResultStream s;
    s.push(TaskResult{});
    CHECK(s.try_pop().has_value());
    CHECK_FALSE(s.try_pop().has_value());
    std::thread producer([&] {
      TaskResult x;
      x.task = "late";
      s.push(x);
      s.close();
    });
    auto got = s.pop();
    producer.join();
    REQUIRE(got);
    CHECK(got->task == "late");
    CHECK_FALSE(s.pop().has_value());
    CHECK(s.closed());
  }

  TEST_CASE("a backward task answers like a direct query") {
    KnowledgeBase kb = parse_kb(kChain);
    Engine e(kb), ref(kb);
    for (Engine* x : {&e, &ref}) {
      x->assert_evidence("a", {0.5, 1});
      x->assert_evidence("x", {1, 1});
    }
    VirtualClock clock;
    Executive ex(e, flat(5), clock);
    ex.submit(query("q", "g"));
    ex.run_until_idle();
    auto rs = ex.results().drain();
    REQUIRE(rs.size() == 1);
    CHECK(rs[0].status == TaskStatus::Done);
    CHECK(rs[0].interval == ref.query("g").first);
    CHECK_FALSE(rs[0].partial);
    CHECK(rs[0].units == 5);
    CHECK(clock.now_us() == 15);
    CHECK(rs[0].elapsed_us == 15);
    CHECK(rs[0].plan == "paths=2/2 cost=15 budget=1e+15");
    CHECK(ex.execution_log() == std::vector<std::string>{"q"});
    CHECK(e.dirty(*e.find("h")));
  }

  TEST_CASE("budgets and scopes limit what runs") {
    KnowledgeBase kb = parse_kb(kChain);
    Engine e(kb);
    e.assert_evidence("a", {0.5, 1});
    e.assert_evidence("x", {1, 1});
    VirtualClock clock;
    Executive ex(e, flat(5), clock);
    Task t = query("scoped", "g");
    t.scope = std::vector<ClassPath>{{"fast"}};
    ex.submit(t);
    ex.run_until_idle();
    TaskResult r = *ex.results().try_pop();
    CHECK(r.status == TaskStatus::Done);
    CHECK(r.partial);
    CHECK(r.validity == Validity::Unreliable);
    CHECK(r.interval->lb == doctest::Approx(0.5));
    CHECK(clock.now_us() == 5);

    Task b = query("tight", "g");
    b.budget_us = 8;
    ex.submit(b);
    ex.run_until_idle();
    r = *ex.results().try_pop();
    CHECK(r.plan == "paths=1/2 cost=0 budget=8");
    CHECK(r.partial);
    CHECK(r.interval->lb == doctest::Approx(0.5));

    b.id = "roomy";
    b.budget_us = 10;
    ex.submit(b);
    ex.run_until_idle();
    r = *ex.results().try_pop();
    CHECK(r.plan == "paths=2/2 cost=10 budget=10");
    CHECK_FALSE(r.partial);
    CHECK(r.interval->lb == doctest::Approx(0.8));
    CHECK(clock.now_us() == 15);
  }

  TEST_CASE("deadlines cut a task short with its best answer") {
    Engine e(parse_kb(kChain));
    e.assert_evidence("a", {0.5, 1});
    e.assert_evidence("x", {1, 1});
    VirtualClock clock;
    Executive ex(e, flat(5), clock);
    Task q = query("q", "g", 0, 7);
    q.budget_us = 100;
    ex.submit(q);
    ex.run_until_idle();
    TaskResult r = *ex.results().try_pop();
    CHECK(r.status == TaskStatus::Expired);
    CHECK(r.partial);
    CHECK(r.units >= 1);
    CHECK(clock.now_us() <= 7);
    CHECK(r.interval.has_value());

    ex.submit(query("stale", "g", 0, 1));
    r = *ex.results().try_pop();
    CHECK(r.status == TaskStatus::Expired);
    CHECK(r.error.find("submission") != std::string::npos);
  }

  TEST_CASE("a higher-priority arrival preempts at the next boundary") {
    KnowledgeBase kb = parse_kb(kChain);
    Engine e(kb), ref(kb);
    for (Engine* x : {&e, &ref}) {
      x->assert_evidence("a", {0.5, 1});
      x->assert_evidence("x", {1, 1});
      x->assert_evidence("y", {0.4, 1});
    }
    VirtualClock clock;
    Executive ex(e, flat(5), clock);
    std::size_t submitted_at = 0, preempted_units = 0;
    bool sent = false;
    ex.set_boundary_hook([&](const Task& running, std::size_t boundary) {
      if (!sent && running.id == "low" && running.units == 2) {
        sent = true;
        submitted_at = boundary;
        ex.submit(query("high", "h", 5));
      }
      if (running.id == "high" && preempted_units == 0) preempted_units = boundary - submitted_at;
    });
    ex.submit(query("low", "g", 0));
    ex.run_until_idle();
    CHECK(ex.execution_log() == std::vector<std::string>{"low", "high", "low"});
    CHECK(preempted_units == 1);
    auto rs = ex.results().drain();
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].task == "high");
    CHECK(rs[1].task == "low");
    CHECK(rs[1].preemptions == 1);
    CHECK(rs[1].status == TaskStatus::Done);
    CHECK(rs[1].interval == ref.query("g").first);
    CHECK(rs[0].interval == ref.query("h").first);
  }

  TEST_CASE("forward tasks assert and propagate") {
    Engine e(parse_kb(kChain));
    VirtualClock clock;
    Executive ex(e, flat(1), clock);
    Task f;
    f.id = "ping";
    f.kind = TaskKind::Forward;
    f.evidence = {{"a", {1, 1}}, {"y", {0.5, 1}}};
    ex.submit(f);
    ex.run_until_idle();
    TaskResult r = *ex.results().try_pop();
    CHECK(r.status == TaskStatus::Done);
    CHECK(r.changed == std::vector<std::string>{"a", "g", "h", "y"});
    CHECK_FALSE(e.dirty(*e.find("g")));
    CHECK(format_result_record(r).find(":changed (a g h y)") != std::string::npos);
  }

  TEST_CASE("failures are confined to their task") {
    Engine e(parse_kb(kChain));
    VirtualClock clock;
    Executive ex(e, flat(1), clock);
    ex.submit(query("bad", "nope"));
    ex.submit(query("good", "h"));
    ex.run_until_idle();
    auto rs = ex.results().drain();
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].status == TaskStatus::Failed);
    CHECK(rs[0].error.find("unknown wff") != std::string::npos);
    CHECK(rs[1].status == TaskStatus::Done);
    CHECK(format_result_record(rs[0]).rfind("(result :task bad :kind query :status failed", 0) == 0);
  }

  TEST_CASE("generated ids and the worker thread") {
    Engine e(parse_kb(kChain));
    RealClock clock;
    Executive ex(e, flat(1), clock);
    ex.start();
    std::string id = ex.submit(query("", "g"));
    CHECK(id == "task0");
    auto r = ex.results().pop();
    ex.stop();
    REQUIRE(r);
    CHECK(r->task == "task0");
    CHECK(r->status == TaskStatus::Done);
  }

  TEST_CASE("tasks file parsing") {
    auto ts = parse_tasks(R"T(
      (query "threat(s1)" :id q1 :priority 3 :deadline 20 :scope ("threat/alert" kinematics) :budget 500)
      (evidence ((a 0.5 1) ("range(s1)=near" 1 1)) :priority 1)
      (query "~g" :deadline "2999-01-01T00:00:00Z"))T", 1000);
    REQUIRE(ts.size() == 3);
    CHECK(ts[0].goal == "threat(s1)");
    CHECK(ts[0].priority == 3);
    CHECK(ts[0].deadline_us == 1000 + 20000);
    CHECK(ts[0].scope->size() == 2);
    CHECK((*ts[0].scope)[0] == ClassPath{"threat", "alert"});
    CHECK(ts[0].budget_us == 500);
    CHECK(ts[1].kind == TaskKind::Forward);
    CHECK(ts[1].evidence[1].wff == "range(s1)=near");
    CHECK(ts[2].deadline_us > 1e12);
    CHECK_THROWS_AS(parse_tasks("(query g :priority 1.5)", 0), ParseError);
    CHECK_THROWS_AS(parse_tasks("(evidence ((a 0.9 0.1)))", 0), ParseError);
    CHECK_THROWS_AS(parse_tasks("(forget g)", 0), ParseError);
    CHECK_THROWS_AS(parse_tasks("(query g :deadline \"tomorrow\")", 0), ParseError);
    CHECK_THROWS_AS(parse_tasks("(query g :colour red)", 0), ParseError);
    CHECK_THROWS(iso8601_offset_us("2020-13-45"));
    CHECK(iso8601_offset_us("2000-01-01T00:00:00.5Z") < 0);
  }
}

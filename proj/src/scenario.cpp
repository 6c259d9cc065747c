#include "prk/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "prk/sexpr.hpp"

namespace prk {

namespace {

constexpr double kTurnThreshold = 45.0;  // perceived heading change flagged as a turn
constexpr double kTruthTurn = 90.0;      // ordered heading change that counts as a turn-away
constexpr int kRecentSteps = 3;

double norm_heading(double h) {
  h = std::fmod(h, 360.0);
  return h < 0 ? h + 360.0 : h;
}

double heading_diff(double a, double b) {
  double d = std::fmod(std::fabs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

[[noreturn]] void fail(const Sexpr& at, const std::string& msg) {
  throw ScenarioError("scenario " + std::to_string(at.pos.line) + ":" + std::to_string(at.pos.column) + ": " + msg);
}

double num(const KeywordArgs& kw, std::string_view key, double fallback) {
  const Sexpr* v = kw.get(key);
  return v ? v->number() : fallback;
}

int step(const Sexpr& v) {
  double d = v.number();
  if (d < 0 || d != std::floor(d)) fail(v, "expected a non-negative integer step");
  return static_cast<int>(d);
}

std::string atom(const Sexpr& v) {
  if (!v.is_atom() || v.is_keyword()) fail(v, "expected a symbol");
  return v.text;
}

}  // namespace

std::string classify_aspect(double x, double y, double heading, double speed, double own_x, double own_y) {
  double dx = own_x - x, dy = own_y - y;
  double dist = std::hypot(dx, dy);
  if (speed <= 0.0 || dist <= 0.0) return "crossing";
  double vx = std::sin(rad(heading)), vy = std::cos(rad(heading));
  double c = std::clamp((dx * vx + dy * vy) / dist, -1.0, 1.0);
  double angle = std::acos(c) * 180.0 / std::numbers::pi;
  if (angle < 60.0) return "closing";
  if (angle > 120.0) return "opening";
  return "crossing";
}

std::string classify_range(double x, double y, double own_x, double own_y) {
  double d = std::hypot(own_x - x, own_y - y);
  return d <= 6.0 ? "near" : d <= 12.0 ? "medium" : "far";
}

std::string classify_speed(double speed) { return speed >= 2.0 ? "fast" : "slow"; }

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  bool header = false;
  std::vector<Sexpr> forms;
  try {
    forms = read_sexprs(text);
  } catch (const ParseError& e) {
    throw ScenarioError("scenario " + std::to_string(e.pos().line) + ":" + std::to_string(e.pos().column) + ": " +
                        e.message());
  }
  std::set<std::string> ids;
  try {
    for (const Sexpr& f : forms) {
      if (!f.is_list() || f.size() == 0 || !f[0].is_atom()) fail(f, "expected a (keyword ...) form");
      const std::string& head = f[0].text;
      if (head == "scenario") {
        if (header) fail(f, "duplicate scenario header");
        header = true;
        KeywordArgs kw(f, 1);
        kw.reject_unknown({":seed", ":steps"});
        if (kw.positional().size() != 1) fail(f, "(scenario NAME :seed n :steps n)");
        s.name = atom(*kw.positional()[0]);
        if (auto* v = kw.get(":seed")) {
          double d = v->number();
          if (d < 0 || d != std::floor(d)) fail(*v, "seed must be a non-negative integer");
          s.seed = static_cast<std::uint64_t>(d);
        }
        if (auto* v = kw.get(":steps")) s.steps = step(*v);
        if (s.steps < 1) fail(f, "steps must be at least 1");
      } else if (head == "ownship") {
        KeywordArgs kw(f, 1);
        kw.reject_unknown({":x", ":y"});
        s.own_x = num(kw, ":x", 0.0);
        s.own_y = num(kw, ":y", 0.0);
      } else if (head == "object") {
        KeywordArgs kw(f, 1);
        kw.reject_unknown({":type", ":class", ":iff", ":x", ":y", ":heading", ":speed"});
        if (kw.positional().size() != 1) fail(f, "(object ID :keyword value ...)");
        ScenarioObject o;
        o.id = atom(*kw.positional()[0]);
        if (o.id == "-") fail(f, "object id '-' is reserved");
        if (!ids.insert(o.id).second) fail(f, "duplicate object " + o.id);
        if (auto* v = kw.get(":type")) o.type = atom(*v);
        if (auto* v = kw.get(":class")) o.klass = atom(*v);
        if (o.klass != "hostile" && o.klass != "neutral" && o.klass != "unknown") {
          fail(f, "class must be hostile, neutral or unknown");
        }
        if (auto* v = kw.get(":iff")) o.iff = atom(*v);
        o.x = num(kw, ":x", 0.0);
        o.y = num(kw, ":y", 0.0);
        o.heading = norm_heading(num(kw, ":heading", 0.0));
        o.speed = num(kw, ":speed", 0.0);
        if (o.speed < 0) fail(f, "negative speed");
        s.objects.push_back(std::move(o));
      } else if (head == "order") {
        KeywordArgs kw(f, 1);
        kw.reject_unknown({":at", ":heading", ":speed"});
        if (kw.positional().size() != 1) fail(f, "(order ID :at step ...)");
        Order o;
        o.object = atom(*kw.positional()[0]);
        o.at = step(kw.require(":at"));
        if (auto* v = kw.get(":heading")) o.heading = norm_heading(v->number());
        if (auto* v = kw.get(":speed")) {
          o.speed = v->number();
          if (*o.speed < 0) fail(*v, "negative speed");
        }
        if (!o.heading && !o.speed) fail(f, "order changes nothing");
        s.orders.push_back(std::move(o));
      } else if (head == "own") {
        KeywordArgs kw(f, 1);
        kw.reject_unknown({":at", ":value", ":domain"});
        if (kw.positional().size() != 1) fail(f, "(own VAR :at step :value V :domain (V ...))");
        OwnSetting o;
        o.variable = atom(*kw.positional()[0]);
        o.at = step(kw.require(":at"));
        o.value = atom(kw.require(":value"));
        const Sexpr& d = kw.require(":domain");
        if (!d.is_list()) fail(d, ":domain expects a list");
        for (const Sexpr& v : d.items) o.domain.push_back(atom(v));
        if (std::find(o.domain.begin(), o.domain.end(), o.value) == o.domain.end()) {
          fail(f, "value not in domain");
        }
        s.own.push_back(std::move(o));
      } else if (head == "sensor") {
        KeywordArgs kw(f, 1);
        kw.reject_unknown({":noise", ":position-sigma", ":heading-sigma", ":detect-prob", ":period", ":blind"});
        SensorModel& m = s.sensor;
        m.noise = num(kw, ":noise", m.noise);
        m.position_sigma = num(kw, ":position-sigma", m.position_sigma);
        m.heading_sigma = num(kw, ":heading-sigma", m.heading_sigma);
        m.detect_prob = num(kw, ":detect-prob", m.detect_prob);
        if (auto* v = kw.get(":period")) m.period = step(*v);
        if (m.noise < 0 || m.noise > 1) fail(f, "noise outside [0,1]");
        if (m.detect_prob < 0 || m.detect_prob > 1) fail(f, "detect-prob outside [0,1]");
        if (m.period < 1) fail(f, "period must be at least 1");
        if (m.position_sigma < 0 || m.heading_sigma < 0) fail(f, "negative sigma");
        if (auto* b = kw.get(":blind")) {
          if (!b->is_list()) fail(*b, ":blind expects ((from to) ...)");
          for (const Sexpr& w : b->items) {
            if (!w.is_list() || w.size() != 2) fail(w, "expected (from to)");
            int a = step(w[0]), z = step(w[1]);
            if (z < a) fail(w, "empty blind window");
            m.blind.emplace_back(a, z);
          }
        }
      } else {
        fail(f[0], "unknown form '" + head + "'");
      }
    }
  } catch (const ParseError& e) {
    throw ScenarioError("scenario " + std::to_string(e.pos().line) + ":" + std::to_string(e.pos().column) + ": " +
                        e.message());
  }
  if (!header) throw ScenarioError("scenario has no (scenario NAME ...) header");
  for (const Order& o : s.orders) {
    if (!ids.count(o.object)) throw ScenarioError("order for unknown object " + o.object);
    if (o.at > s.steps) throw ScenarioError("order for " + o.object + " after the last step");
  }
  std::stable_sort(s.orders.begin(), s.orders.end(), [](const Order& a, const Order& b) { return a.at < b.at; });
  return s;
}

std::optional<bool> GroundTruth::label(int t, const std::string& object, const std::string& name) const {
  for (const TruthState& s : states) {
    if (s.t == t && s.object == object) {
      auto it = s.labels.find(name);
      return it == s.labels.end() ? std::optional<bool>{} : std::optional<bool>{it->second};
    }
  }
  return std::nullopt;
}

bool GroundTruth::has_label(const std::string& name) const {
  return std::any_of(states.begin(), states.end(), [&](const TruthState& s) { return s.labels.count(name) > 0; });
}

std::string write_truth(const GroundTruth& g) {
  std::ostringstream os;
  os << "RGT1\n";
  os << "scenario " << (g.scenario.empty() ? "-" : g.scenario) << "\n";
  os << "seed " << g.seed << "\n";
  for (const TruthState& s : g.states) {
    os << "state " << s.t << " " << s.object << " " << format_number(s.x) << " " << format_number(s.y) << " "
       << format_number(s.heading) << " " << format_number(s.speed) << " " << s.klass << "\n";
    for (const auto& [name, v] : s.labels) {
      os << "label " << s.t << " " << s.object << " " << name << " " << (v ? "true" : "false") << "\n";
    }
  }
  return os.str();
}

GroundTruth read_truth(std::string_view text) {
  GroundTruth g;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  bool header = false;
  auto bad = [&](const std::string& m) { throw ScenarioError("truth line " + std::to_string(n) + ": " + m); };
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == ';') continue;
    if (!header) {
      if (line != "RGT1") bad("expected header RGT1");
      header = true;
      continue;
    }
    std::istringstream f(line);
    std::string head;
    f >> head;
    if (head == "scenario") {
      f >> g.scenario;
      if (g.scenario == "-") g.scenario.clear();
    } else if (head == "seed") {
      if (!(f >> g.seed)) bad("expected a seed");
    } else if (head == "state") {
      TruthState s;
      if (!(f >> s.t >> s.object >> s.x >> s.y >> s.heading >> s.speed >> s.klass)) {
        bad("expected 'state t object x y heading speed class'");
      }
      if (!g.states.empty() && s.t < g.states.back().t) bad("states are not time-ordered");
      g.states.push_back(std::move(s));
    } else if (head == "label") {
      int t = 0;
      std::string obj, name, v;
      if (!(f >> t >> obj >> name >> v) || (v != "true" && v != "false")) {
        bad("expected 'label t object name true|false'");
      }
      if (g.states.empty() || g.states.back().t != t || g.states.back().object != obj) {
        bad("label does not follow its state line");
      }
      g.states.back().labels[name] = v == "true";
    } else {
      bad("unknown record " + head);
    }
  }
  if (!header) throw ScenarioError("truth file has no RGT1 header");
  return g;
}

ScenarioOutput run_scenario(const Scenario& s) {
  ScenarioOutput out;
  out.truth.scenario = s.name;
  out.truth.seed = s.seed;
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const SensorModel& m = s.sensor;

  struct Live {
    ScenarioObject o;
    std::optional<int> turned_at;  // last ordered turn-away
    bool seen = false;
    std::optional<double> last_course;
    std::optional<int> turn_seen_at;
  };
  std::vector<Live> live;
  for (const ScenarioObject& o : s.objects) live.push_back({o, {}, false, {}, {}});

  auto blind = [&](int t) {
    return std::any_of(m.blind.begin(), m.blind.end(), [&](auto w) { return t >= w.first && t <= w.second; });
  };
  auto emit = [&](int t, const std::string& obj, const std::string& var, const std::string& value, double lb,
                  double ub) { out.track.records.push_back({static_cast<double>(t), obj, var, value, lb, ub}); };
  auto emit_category = [&](int t, const std::string& obj, const std::string& var, const std::string& measured,
                           std::initializer_list<const char*> domain) {
    for (const char* v : domain) {
      if (measured == v) {
        emit(t, obj, var, v, 1.0 - m.noise, 1.0);
      } else {
        emit(t, obj, var, v, 0.0, m.noise);
      }
    }
  };

  for (int t = 0; t <= s.steps; ++t) {
    for (const Order& ord : s.orders) {
      if (ord.at != t) continue;
      for (Live& l : live) {
        if (l.o.id != ord.object) continue;
        if (ord.heading) {
          if (heading_diff(*ord.heading, l.o.heading) >= kTruthTurn) l.turned_at = t;
          l.o.heading = *ord.heading;
        }
        if (ord.speed) l.o.speed = *ord.speed;
      }
    }
    if (t > 0) {
      for (Live& l : live) {
        l.o.x += l.o.speed * std::sin(rad(l.o.heading));
        l.o.y += l.o.speed * std::cos(rad(l.o.heading));
      }
    }

    for (const Live& l : live) {
      TruthState st{t, l.o.id, l.o.x, l.o.y, l.o.heading, l.o.speed, l.o.klass, {}};
      std::string aspect = classify_aspect(l.o.x, l.o.y, l.o.heading, l.o.speed, s.own_x, s.own_y);
      bool turn_away = l.turned_at && t - *l.turned_at <= kRecentSteps && aspect == "opening";
      st.labels["approaching"] = aspect == "closing";
      st.labels["withdrawing"] = aspect == "opening";
      st.labels["turn-away"] = turn_away;
      st.labels["turn-away-and-run"] = turn_away && classify_speed(l.o.speed) == "fast";
      st.labels["threat"] = l.o.klass == "hostile" && aspect == "closing";
      out.truth.states.push_back(std::move(st));
    }

    for (const OwnSetting& o : s.own) {
      if (o.at != t) continue;
      for (const std::string& v : o.domain) emit(t, "-", o.variable, v, v == o.value ? 1.0 : 0.0, v == o.value ? 1.0 : 0.0);
    }
    if (t % m.period != 0 || blind(t)) continue;
    for (Live& l : live) {
      // Draw every variate even for undetected objects so one object's
      // detection does not shift another's noise.
      double detect = uniform(rng);
      double ex = gauss(rng), ey = gauss(rng), eh = gauss(rng), ev = gauss(rng);
      if (detect >= m.detect_prob && m.detect_prob < 1.0) continue;
      const std::string& id = l.o.id;
      double px = l.o.x + m.noise * m.position_sigma * ex;
      double py = l.o.y + m.noise * m.position_sigma * ey;
      double course = norm_heading(l.o.heading + m.noise * m.heading_sigma * eh);
      double knots = std::max(0.0, l.o.speed + m.noise * 0.5 * m.position_sigma * ev);
      if (!l.seen) {
        emit(t, id, "type", l.o.type, 1.0, 1.0);
        l.seen = true;
      }
      if (l.last_course && heading_diff(course, *l.last_course) > kTurnThreshold) l.turn_seen_at = t;
      l.last_course = course;
      emit(t, id, "iff", l.o.iff, 1.0, 1.0);
      emit(t, id, "pos-x", format_number(px), 1.0 - m.noise, 1.0);
      emit(t, id, "pos-y", format_number(py), 1.0 - m.noise, 1.0);
      emit(t, id, "course", format_number(course), 1.0 - m.noise, 1.0);
      emit(t, id, "knots", format_number(knots), 1.0 - m.noise, 1.0);
      emit_category(t, id, "class", l.o.klass, {"hostile", "neutral", "unknown"});
      emit_category(t, id, "range", classify_range(px, py, s.own_x, s.own_y), {"near", "medium", "far"});
      emit_category(t, id, "aspect", classify_aspect(px, py, course, knots, s.own_x, s.own_y),
                    {"closing", "opening", "crossing"});
      emit_category(t, id, "speed", classify_speed(knots), {"slow", "fast"});
      bool recent = l.turn_seen_at && t - *l.turn_seen_at <= kRecentSteps;
      emit_category(t, id, "heading-change", recent ? "recent" : "none", {"recent", "none"});
      emit_category(t, id, "cavitation", knots >= 2.5 ? "yes" : "no", {"yes", "no"});
    }
  }
  return out;
}

}  // namespace prk

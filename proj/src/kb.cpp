#include "prk/kb.hpp"

#include <algorithm>

namespace prk {

namespace {

bool is_symbol_char_ok(char c) {
  return c != '(' && c != ')' && c != ',' && c != '=' && c != ' ' && c != '\t' && c != '\n';
}

[[noreturn]] void kb_fail(const Sexpr& at, const std::string& msg) {
  std::string tok = at.str();
  if (tok.size() > 40) tok = tok.substr(0, 37) + "...";
  throw KbError(at.pos, msg, tok);
}

std::string symbol(const Sexpr& s, const char* what) {
  if (!s.is_atom() || s.is_keyword() || s.text.empty()) kb_fail(s, std::string("expected ") + what);
  for (char c : s.text) {
    if (!is_symbol_char_ok(c)) kb_fail(s, std::string("invalid character in ") + what);
  }
  return s.text;
}

// Predicate names may contain '=' (the builtins attr= and meta>= do).
std::string predicate_name(const Sexpr& s) {
  if (!s.is_atom() || s.is_keyword() || s.text.empty()) kb_fail(s, "expected predicate name");
  for (char c : s.text) {
    if (c != '=' && !is_symbol_char_ok(c)) kb_fail(s, "invalid character in predicate name");
  }
  return s.text;
}

Term parse_term(const Sexpr& s) {
  if (!s.is_atom() || s.is_keyword()) kb_fail(s, "expected a variable or constant");
  std::string name = symbol(s, "term");
  return Term{name.size() > 1 && name[0] == '?', name};
}

WffPattern parse_pattern(const Sexpr& s) {
  WffPattern p;
  if (s.is_atom()) {
    p.variable = symbol(s, "wff");
    if (p.variable[0] == '?') kb_fail(s, "a wff cannot be a bare variable");
    return p;
  }
  if (s.size() == 0) kb_fail(s, "empty wff");
  p.variable = symbol(s[0], "wff variable");
  if (p.variable[0] == '?') kb_fail(s[0], "wff variable name cannot start with '?'");
  std::size_t end = s.size();
  if (s.size() >= 3 && s[s.size() - 2].is_atom("=")) {
    const Sexpr& v = s[s.size() - 1];
    p.value = symbol(v, "wff value");
    if (p.value[0] == '?') kb_fail(v, "wff value cannot be a variable");
    end = s.size() - 2;
  }
  for (std::size_t i = 1; i < end; ++i) {
    if (s[i].is_atom("=")) kb_fail(s[i], "misplaced '='");
    p.args.push_back(parse_term(s[i]));
  }
  return p;
}

bool is_head(const Sexpr& s, std::string_view head) {
  return s.is_list() && s.size() > 0 && s[0].is_atom(head);
}

PredicateCall parse_call(const Sexpr& s, std::size_t first) {
  PredicateCall c;
  c.pos = s.pos;
  if (s.size() <= first) kb_fail(s, "expected a predicate name");
  c.name = predicate_name(s[first]);
  for (std::size_t i = first + 1; i < s.size(); ++i) c.args.push_back(parse_term(s[i]));
  return c;
}

Premise parse_premise(const Sexpr& s) {
  Premise p;
  if (is_head(s, "not")) {
    if (s.size() != 2) kb_fail(s, "(not <wff>) takes one wff");
    p.kind = PremiseKind::NegatedWff;
    p.wff = parse_pattern(s[1]);
  } else if (is_head(s, "call")) {
    p.kind = PremiseKind::Call;
    p.call = parse_call(s, 1);
  } else if (is_head(s, "test")) {
    if (s.size() != 4) kb_fail(s, "(test <wff> <:lb>=|:ub<=|:ignorance<> <threshold>)");
    p.kind = PremiseKind::Test;
    p.wff = parse_pattern(s[1]);
    const std::string& k = s[2].text;
    if (k == ":lb>=") {
      p.test = TestKind::LbAtLeast;
    } else if (k == ":ub<=") {
      p.test = TestKind::UbAtMost;
    } else if (k == ":ignorance<") {
      p.test = TestKind::IgnoranceBelow;
    } else {
      kb_fail(s[2], "unknown test");
    }
    p.threshold = s[3].number();
    if (p.threshold < 0 || p.threshold > 1) kb_fail(s[3], "test threshold outside [0,1]");
  } else if (is_head(s, "or") || is_head(s, "and")) {
    kb_fail(s, "connectives are not allowed inside a premise");
  } else {
    p.kind = PremiseKind::Wff;
    p.wff = parse_pattern(s);
  }
  return p;
}

double unit_number(const Sexpr& s, const char* what) {
  double v = s.number();
  if (v < 0.0 || v > 1.0) kb_fail(s, std::string(what) + " outside [0,1]");
  return v;
}

Interval parse_interval(const Sexpr& s) {
  if (!s.is_list() || s.size() != 2) kb_fail(s, "expected an interval (lb ub)");
  double lb = unit_number(s[0], "lower bound");
  double ub = unit_number(s[1], "upper bound");
  if (lb > ub) kb_fail(s, "lower bound exceeds upper bound");
  return {lb, ub};
}

Tnorm parse_family(const Sexpr& s) {
  if (!s.is_atom()) kb_fail(s, "expected a T-norm name");
  auto f = parse_tnorm(s.text);
  if (!f) kb_fail(s, "unknown T-norm (expected T1, T1.5, T2, T2.5 or T3)");
  return *f;
}

void collect_vars(const std::vector<Term>& args, std::set<std::string>& out) {
  for (const Term& t : args) {
    if (t.is_variable) out.insert(t.name);
  }
}

class KbParser {
public:
  KnowledgeBase run(std::string_view source) {
    auto forms = read_sexprs(source);
    for (const Sexpr& f : forms) {
      if (!f.is_list() || f.size() == 0 || !f[0].is_atom()) kb_fail(f, "expected a declaration");
      const std::string& head = f[0].text;
      if (head == "object-type") {
        declare_type(f);
      } else if (head == "predicate") {
        declare_predicate(f);
      } else if (head == "class") {
        declare_class(f);
      } else if (head == "rule") {
        rule_forms_.push_back(&f);
      } else if (head == "input") {
        input_forms_.push_back(&f);
      } else if (head == "aggregate") {
        declare_aggregate(f);
      } else if (head == "ignorance-threshold") {
        declare_threshold(f);
      } else if (head == "default") {
        default_forms_.push_back(&f);
      } else {
        kb_fail(f[0], "unknown declaration");
      }
    }
    // Rules may reference classes and types declared later in the file.
    for (const Sexpr* f : rule_forms_) parse_rule(*f);
    std::sort(kb_.templates.begin(), kb_.templates.end(),
              [](const RuleTemplate& a, const RuleTemplate& b) { return a.name < b.name; });
    check_leaf_classes();
    for (const Sexpr* f : input_forms_) parse_input(*f);
    for (const Sexpr* f : default_forms_) parse_default(*f);
    std::sort(kb_.declared_inputs.begin(), kb_.declared_inputs.end(),
              [](const WffPattern& a, const WffPattern& b) { return format_pattern(a) < format_pattern(b); });
    std::sort(kb_.defaults.begin(), kb_.defaults.end(), [](const DefaultDecl& a, const DefaultDecl& b) {
      return format_pattern(a.pattern) < format_pattern(b.pattern);
    });
    return std::move(kb_);
  }

private:
  void declare_type(const Sexpr& f) {
    if (f.size() != 2) kb_fail(f, "(object-type <name>)");
    std::string name = symbol(f[1], "type name");
    if (!kb_.object_types.insert(name).second) kb_fail(f[1], "duplicate name: object type");
  }

  void declare_predicate(const Sexpr& f) {
    if (f.size() != 3) kb_fail(f, "(predicate <name> <arity>)");
    std::string name = predicate_name(f[1]);
    double arity = f[2].number();
    if (arity < 0 || arity != static_cast<int>(arity)) kb_fail(f[2], "arity must be a non-negative integer");
    if (!kb_.predicates.emplace(name, static_cast<int>(arity)).second) {
      kb_fail(f[1], "duplicate name: predicate");
    }
  }

  void declare_class(const Sexpr& f) {
    if (f.size() < 2) kb_fail(f, "(class <segment> ...)");
    ClassPath path;
    for (std::size_t i = 1; i < f.size(); ++i) path.push_back(symbol(f[i], "class segment"));
    if (path.size() == 1 && path[0].find('/') != std::string::npos) path = parse_class_path(path[0]);
    if (!explicit_classes_.insert(path).second) kb_fail(f, "duplicate name: rule class");
    for (std::size_t n = 1; n <= path.size(); ++n) {
      kb_.classes.insert(ClassPath(path.begin(), path.begin() + static_cast<long>(n)));
    }
  }

  void declare_aggregate(const Sexpr& f) {
    if (f.size() != 3) kb_fail(f, "(aggregate <variable> <tnorm>)");
    std::string var = symbol(f[1], "variable");
    if (!kb_.aggregation.emplace(var, parse_family(f[2])).second) {
      kb_fail(f[1], "duplicate aggregation for variable");
    }
  }

  void declare_threshold(const Sexpr& f) {
    if (f.size() != 3) kb_fail(f, "(ignorance-threshold <variable> <theta>)");
    std::string var = symbol(f[1], "variable");
    if (!kb_.ignorance_thresholds.emplace(var, unit_number(f[2], "threshold")).second) {
      kb_fail(f[1], "duplicate ignorance threshold for variable");
    }
  }

  void parse_input(const Sexpr& f) {
    if (f.size() != 2) kb_fail(f, "(input <wff>)");
    WffPattern p = parse_pattern(f[1]);
    if (kb_.concludes(p.signature())) kb_fail(f[1], "declared input is concluded by a rule");
    kb_.declared_inputs.push_back(std::move(p));
  }

  void parse_default(const Sexpr& f) {
    KeywordArgs kw(f, 1);
    kw.reject_unknown({":interval", ":theta"});
    if (kw.positional().size() != 1) kb_fail(f, "(default <wff> :interval (lb ub) :theta x)");
    DefaultDecl d;
    d.pattern = parse_pattern(*kw.positional()[0]);
    d.interval = parse_interval(kw.require(":interval"));
    d.theta = unit_number(kw.require(":theta"), "theta");
    for (const DefaultDecl& o : kb_.defaults) {
      if (o.pattern == d.pattern) kb_fail(f, "duplicate default on the same wff");
    }
    kb_.defaults.push_back(std::move(d));
  }

  void parse_rule(const Sexpr& f) {
    RuleTemplate t;
    t.pos = f.pos;
    KeywordArgs kw(f, 1);
    kw.reject_unknown({":class", ":vars", ":context", ":premises", ":nm-premises", ":sufficiency",
                       ":necessity", ":tnorm", ":conclusion"});
    if (kw.positional().size() != 1) kb_fail(f, "(rule <name> :keyword value ...)");
    t.name = symbol(*kw.positional()[0], "rule name");
    if (!rule_names_.insert(t.name).second) kb_fail(*kw.positional()[0], "duplicate name: rule");

    if (const Sexpr* c = kw.get(":class")) {
      if (!c->is_atom()) kb_fail(*c, "expected a class path a/b/c");
      t.rule_class = parse_class_path(c->text);
      if (!kb_.classes.count(t.rule_class)) kb_fail(*c, "undeclared rule class");
    } else {
      t.rule_class = kDefaultClass;
      kb_.classes.insert(kDefaultClass);
    }

    if (const Sexpr* vs = kw.get(":vars")) {
      if (!vs->is_list()) kb_fail(*vs, ":vars expects ((?v type) ...)");
      for (const Sexpr& v : vs->items) {
        if (!v.is_list() || v.size() != 2) kb_fail(v, "expected (?var type)");
        TemplateVar tv{symbol(v[0], "variable"), symbol(v[1], "type")};
        if (tv.name.size() < 2 || tv.name[0] != '?') kb_fail(v[0], "template variables start with '?'");
        if (!kb_.object_types.count(tv.type)) kb_fail(v[1], "undeclared object type");
        if (t.find_var(tv.name)) kb_fail(v[0], "duplicate template variable");
        t.vars.push_back(std::move(tv));
      }
    }

    if (const Sexpr* ps = kw.get(":premises")) {
      if (!ps->is_list()) kb_fail(*ps, ":premises expects a list");
      for (const Sexpr& p : ps->items) t.premises.push_back(parse_premise(p));
    }
    if (const Sexpr* ns = kw.get(":nm-premises")) {
      if (!ns->is_list()) kb_fail(*ns, ":nm-premises expects a list");
      for (const Sexpr& n : ns->items) {
        if (!n.is_list() || n.size() != 3 || !n[1].is_atom(":alpha")) kb_fail(n, "expected (<wff> :alpha x)");
        t.nm_premises.push_back(NmPremise{parse_pattern(n[0]), unit_number(n[2], "alpha")});
      }
    }
    if (const Sexpr* ctx = kw.get(":context")) {
      if (!ctx->is_list()) kb_fail(*ctx, ":context expects a list of predicate calls");
      for (const Sexpr& c : ctx->items) {
        if (!c.is_list()) kb_fail(c, "expected (predicate args...)");
        t.context.push_back(parse_call(c, 0));
      }
    }
    if (t.premises.empty() && t.nm_premises.empty()) kb_fail(f, "rule has no premises");

    t.sufficiency = unit_number(kw.require(":sufficiency"), "sufficiency");
    if (const Sexpr* n = kw.get(":necessity")) t.necessity = unit_number(*n, "necessity");
    if (const Sexpr* fam = kw.get(":tnorm")) t.family = parse_family(*fam);

    const Sexpr& concl = kw.require(":conclusion");
    if (is_head(concl, "or")) kb_fail(concl, "disjunctive conclusion");
    if (is_head(concl, "not")) kb_fail(concl, "negated conclusion");
    if (is_head(concl, "and")) kb_fail(concl, "conjunctive conclusion (use two rules)");
    if (is_head(concl, "call") || is_head(concl, "test")) kb_fail(concl, "conclusion must be a wff");
    t.conclusion = parse_pattern(concl);

    check_variables(t, f);
    kb_.templates.push_back(std::move(t));
  }

  void check_variables(const RuleTemplate& t, const Sexpr& f) {
    std::set<std::string> used;
    std::set<std::string> in_premises;
    for (const Premise& p : t.premises) {
      if (p.kind == PremiseKind::Call) {
        collect_vars(p.call.args, in_premises);
      } else {
        collect_vars(p.wff.args, in_premises);
      }
    }
    for (const NmPremise& p : t.nm_premises) collect_vars(p.wff.args, in_premises);
    used = in_premises;
    for (const PredicateCall& c : t.context) collect_vars(c.args, used);
    std::set<std::string> concl;
    collect_vars(t.conclusion.args, concl);
    used.insert(concl.begin(), concl.end());
    for (const std::string& v : used) {
      if (!t.find_var(v)) kb_fail(f, "undeclared template variable " + v);
    }
    for (const std::string& v : concl) {
      if (!in_premises.count(v)) kb_fail(f, "conclusion variable " + v + " does not appear in any premise");
    }
  }

  void check_leaf_classes() {
    for (const RuleTemplate& t : kb_.templates) {
      for (const ClassPath& c : kb_.classes) {
        if (c.size() > t.rule_class.size() && std::equal(t.rule_class.begin(), t.rule_class.end(), c.begin())) {
          throw KbError(t.pos, "rule class " + format_class_path(t.rule_class) + " is not a leaf", t.name);
        }
      }
    }
  }

  KnowledgeBase kb_;
  std::set<std::string> rule_names_;
  std::set<ClassPath> explicit_classes_;
  std::vector<const Sexpr*> rule_forms_;
  std::vector<const Sexpr*> input_forms_;
  std::vector<const Sexpr*> default_forms_;
};

}  // namespace

std::string_view to_string(TestKind k) {
  switch (k) {
    case TestKind::LbAtLeast: return ":lb>=";
    case TestKind::UbAtMost: return ":ub<=";
    case TestKind::IgnoranceBelow: return ":ignorance<";
  }
  return "?";
}

std::string WffKey::id() const {
  std::string s = variable;
  if (!args.empty()) {
    s += '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) s += ',';
      s += args[i];
    }
    s += ')';
  }
  if (value != "true") {
    s += '=';
    s += value;
  }
  return s;
}

std::string WffKey::signature() const {
  return variable + "/" + std::to_string(args.size()) + "=" + value;
}

std::optional<WffKey> parse_wff_id(std::string_view id) {
  WffKey k;
  std::size_t i = 0;
  auto read_symbol = [&](std::string& out) {
    std::size_t start = i;
    while (i < id.size() && is_symbol_char_ok(id[i])) ++i;
    out.assign(id.substr(start, i - start));
    return !out.empty();
  };
  if (!read_symbol(k.variable)) return std::nullopt;
  if (i < id.size() && id[i] == '(') {
    ++i;
    while (true) {
      std::string a;
      if (!read_symbol(a)) return std::nullopt;
      k.args.push_back(std::move(a));
      if (i < id.size() && id[i] == ',') {
        ++i;
        continue;
      }
      if (i < id.size() && id[i] == ')') {
        ++i;
        break;
      }
      return std::nullopt;
    }
  }
  if (i < id.size() && id[i] == '=') {
    ++i;
    if (!read_symbol(k.value)) return std::nullopt;
  }
  if (i != id.size()) return std::nullopt;
  return k;
}

std::string WffPattern::signature() const {
  return variable + "/" + std::to_string(args.size()) + "=" + value;
}

bool WffPattern::ground() const {
  return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable; });
}

std::string format_class_path(const ClassPath& p) {
  if (p.empty()) return "/";
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += '/';
    s += p[i];
  }
  return s;
}

ClassPath parse_class_path(std::string_view s) {
  ClassPath out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find('/', start);
    if (end == std::string_view::npos) end = s.size();
    if (end > start) out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

const TemplateVar* RuleTemplate::find_var(std::string_view n) const {
  for (const TemplateVar& v : vars) {
    if (v.name == n) return &v;
  }
  return nullptr;
}

const RuleTemplate* KnowledgeBase::find_template(std::string_view name) const {
  auto it = std::lower_bound(templates.begin(), templates.end(), name,
                             [](const RuleTemplate& t, std::string_view n) { return t.name < n; });
  if (it != templates.end() && it->name == name) return &*it;
  for (const RuleTemplate& t : templates) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

bool KnowledgeBase::concludes(const std::string& signature) const {
  return std::any_of(templates.begin(), templates.end(),
                     [&](const RuleTemplate& t) { return t.conclusion.signature() == signature; });
}

Tnorm KnowledgeBase::aggregation_for(const std::string& variable) const {
  if (auto it = aggregation.find(variable); it != aggregation.end()) return it->second;
  std::optional<Tnorm> shared;
  for (const RuleTemplate& t : templates) {
    if (t.conclusion.variable != variable) continue;
    if (shared && *shared != t.family) return Tnorm::T3;
    shared = t.family;
  }
  return shared.value_or(Tnorm::T3);
}

std::vector<RuleClass> KnowledgeBase::rule_classes() const {
  std::vector<RuleClass> out;
  for (const ClassPath& c : classes) {
    RuleClass rc{c, {}};
    for (const RuleTemplate& t : templates) {
      if (t.rule_class == c) rc.members.insert(t.name);
    }
    out.push_back(std::move(rc));
  }
  return out;
}

KnowledgeBase parse_kb(std::string_view source) { return KbParser().run(source); }

std::vector<std::string> ground_args(const std::vector<Term>& args,
                                     const std::map<std::string, std::string>& bindings) {
  std::vector<std::string> out;
  out.reserve(args.size());
  for (const Term& t : args) {
    if (!t.is_variable) {
      out.push_back(t.name);
      continue;
    }
    auto it = bindings.find(t.name);
    if (it == bindings.end()) throw std::invalid_argument("unbound template variable " + t.name);
    out.push_back(it->second);
  }
  return out;
}

WffKey ground(const WffPattern& p, const std::map<std::string, std::string>& bindings) {
  return WffKey{p.variable, ground_args(p.args, bindings), p.value};
}

RuleInstance instantiate(const RuleTemplate& t, const std::map<std::string, ObjectRef>& bindings) {
  RuleInstance r;
  r.template_name = t.name;
  r.id = t.name;
  bool first = true;
  for (const TemplateVar& v : t.vars) {
    auto it = bindings.find(v.name);
    if (it == bindings.end()) throw std::invalid_argument("unbound template variable " + v.name);
    if (it->second.type != v.type) {
      throw std::invalid_argument("type mismatch binding " + v.name + ": expected " + v.type + ", got " +
                                  it->second.type);
    }
    r.bindings[v.name] = it->second.id;
    r.id += first ? '@' : ',';
    r.id += it->second.id;
    first = false;
  }
  for (const Premise& p : t.premises) {
    if (p.kind != PremiseKind::Call) r.ground_premises.push_back(ground(p.wff, r.bindings));
  }
  for (const NmPremise& p : t.nm_premises) r.ground_premises.push_back(ground(p.wff, r.bindings));
  for (const PredicateCall& c : t.context) ground_args(c.args, r.bindings);
  r.ground_conclusion = ground(t.conclusion, r.bindings);
  return r;
}

std::set<std::string> scope_rules(const KnowledgeBase& kb, const std::vector<ClassPath>& filter) {
  for (const ClassPath& p : filter) {
    if (!p.empty() && !kb.classes.count(p)) {
      throw std::invalid_argument("unknown rule class " + format_class_path(p));
    }
  }
  std::set<std::string> out;
  for (const RuleTemplate& t : kb.templates) {
    bool in = filter.empty();
    for (const ClassPath& p : filter) {
      if (p.size() <= t.rule_class.size() && std::equal(p.begin(), p.end(), t.rule_class.begin())) in = true;
    }
    if (in) out.insert(t.name);
  }
  return out;
}

}  // namespace prk

#include <sstream>

#include "prk/kb.hpp"

namespace prk {

namespace {

std::string format_terms(const std::vector<Term>& args) {
  std::string s;
  for (const Term& t : args) {
    s += ' ';
    s += t.name;
  }
  return s;
}

std::string format_call(const PredicateCall& c) { return "(" + c.name + format_terms(c.args) + ")"; }

bool is_maximal(const ClassPath& c, const std::set<ClassPath>& all) {
  for (const ClassPath& o : all) {
    if (o.size() > c.size() && std::equal(c.begin(), c.end(), o.begin())) return false;
  }
  return true;
}

}  // namespace

std::string format_pattern(const WffPattern& p) {
  if (p.args.empty() && p.value == "true") return p.variable;
  std::string s = "(" + p.variable + format_terms(p.args);
  if (p.value != "true") s += " = " + p.value;
  return s + ")";
}

std::string format_premise(const Premise& p) {
  switch (p.kind) {
    case PremiseKind::Wff: return format_pattern(p.wff);
    case PremiseKind::NegatedWff: return "(not " + format_pattern(p.wff) + ")";
    case PremiseKind::Call: return "(call " + p.call.name + format_terms(p.call.args) + ")";
    case PremiseKind::Test:
      return "(test " + format_pattern(p.wff) + " " + std::string(to_string(p.test)) + " " +
             format_number(p.threshold) + ")";
  }
  return "";
}

std::string print_kb(const KnowledgeBase& kb) {
  std::ostringstream os;
  for (const std::string& t : kb.object_types) os << "(object-type " << t << ")\n";
  for (const auto& [name, arity] : kb.predicates) os << "(predicate " << name << " " << arity << ")\n";
  for (const ClassPath& c : kb.classes) {
    if (!is_maximal(c, kb.classes)) continue;
    os << "(class";
    for (const std::string& seg : c) os << " " << seg;
    os << ")\n";
  }
  for (const auto& [var, f] : kb.aggregation) os << "(aggregate " << var << " " << to_string(f) << ")\n";
  for (const auto& [var, th] : kb.ignorance_thresholds) {
    os << "(ignorance-threshold " << var << " " << format_number(th) << ")\n";
  }
  for (const WffPattern& p : kb.declared_inputs) os << "(input " << format_pattern(p) << ")\n";
  for (const DefaultDecl& d : kb.defaults) {
    os << "(default " << format_pattern(d.pattern) << " :interval (" << format_number(d.interval.lb) << " "
       << format_number(d.interval.ub) << ") :theta " << format_number(d.theta) << ")\n";
  }
  for (const RuleTemplate& t : kb.templates) {
    os << "\n(rule " << t.name << "\n";
    os << "  :class " << format_class_path(t.rule_class) << "\n";
    if (!t.vars.empty()) {
      os << "  :vars (";
      for (std::size_t i = 0; i < t.vars.size(); ++i) {
        os << (i ? " " : "") << "(" << t.vars[i].name << " " << t.vars[i].type << ")";
      }
      os << ")\n";
    }
    if (!t.context.empty()) {
      os << "  :context (";
      for (std::size_t i = 0; i < t.context.size(); ++i) os << (i ? " " : "") << format_call(t.context[i]);
      os << ")\n";
    }
    if (!t.premises.empty()) {
      os << "  :premises (";
      for (std::size_t i = 0; i < t.premises.size(); ++i) os << (i ? " " : "") << format_premise(t.premises[i]);
      os << ")\n";
    }
    if (!t.nm_premises.empty()) {
      os << "  :nm-premises (";
      for (std::size_t i = 0; i < t.nm_premises.size(); ++i) {
        os << (i ? " " : "") << "(" << format_pattern(t.nm_premises[i].wff) << " :alpha "
           << format_number(t.nm_premises[i].alpha) << ")";
      }
      os << ")\n";
    }
    os << "  :sufficiency " << format_number(t.sufficiency) << "\n";
    os << "  :necessity " << format_number(t.necessity) << "\n";
    os << "  :tnorm " << to_string(t.family) << "\n";
    os << "  :conclusion " << format_pattern(t.conclusion) << ")\n";
  }
  return os.str();
}

}  // namespace prk

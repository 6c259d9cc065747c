#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "prk/calculus.hpp"
#include "prk/sexpr.hpp"

namespace prk {

/// Thrown for semantic errors in a knowledge base (duplicate names,
/// undeclared classes, out-of-range strengths, ...).
class KbError : public ParseError {
public:
  using ParseError::ParseError;
};

/// A template variable (`?c`) or a constant symbol.
struct Term {
  bool is_variable = false;
  std::string name;

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

/// A ground wff: one value assignment to one (possibly object-indexed) variable.
struct WffKey {
  std::string variable;
  std::vector<std::string> args;
  std::string value = "true";

  /// Canonical text id: `var`, `var=val`, `var(a,b)` or `var(a,b)=val`.
  std::string id() const;
  /// Template-level signature shared by every grounding: `var/arity=value`.
  std::string signature() const;

  friend bool operator==(const WffKey&, const WffKey&) = default;
  friend auto operator<=>(const WffKey&, const WffKey&) = default;
};

/// Parses the canonical id form produced by WffKey::id().
std::optional<WffKey> parse_wff_id(std::string_view id);

struct WffPattern {
  std::string variable;
  std::vector<Term> args;
  std::string value = "true";

  std::string signature() const;
  bool ground() const;
  friend bool operator==(const WffPattern&, const WffPattern&) = default;
};

struct PredicateCall {
  std::string name;
  std::vector<Term> args;
  SourcePos pos;

  friend bool operator==(const PredicateCall& a, const PredicateCall& b) {
    return a.name == b.name && a.args == b.args;
  }
};

enum class PremiseKind { Wff, NegatedWff, Call, Test };
enum class TestKind { LbAtLeast, UbAtMost, IgnoranceBelow };

std::string_view to_string(TestKind k);

struct Premise {
  PremiseKind kind = PremiseKind::Wff;
  WffPattern wff;          // Wff, NegatedWff, Test
  PredicateCall call;      // Call
  TestKind test = TestKind::LbAtLeast;
  double threshold = 0.0;  // Test

  friend bool operator==(const Premise&, const Premise&) = default;
};

/// Non-monotonic antecedent: holds (value 1) iff LB(wff) < alpha.
struct NmPremise {
  WffPattern wff;
  double alpha = 0.5;

  friend bool operator==(const NmPremise&, const NmPremise&) = default;
};

struct TemplateVar {
  std::string name;  // includes the leading '?'
  std::string type;

  friend bool operator==(const TemplateVar&, const TemplateVar&) = default;
};

using ClassPath = std::vector<std::string>;

std::string format_class_path(const ClassPath& p);
ClassPath parse_class_path(std::string_view s);

struct RuleTemplate {
  std::string name;
  std::vector<TemplateVar> vars;
  std::vector<Premise> premises;
  std::vector<NmPremise> nm_premises;
  std::vector<PredicateCall> context;
  double sufficiency = 1.0;
  double necessity = 0.0;
  Tnorm family = Tnorm::T3;
  WffPattern conclusion;
  ClassPath rule_class;
  SourcePos pos;

  const TemplateVar* find_var(std::string_view name) const;
  bool monotonic() const { return nm_premises.empty(); }

  friend bool operator==(const RuleTemplate& a, const RuleTemplate& b) {
    return a.name == b.name && a.vars == b.vars && a.premises == b.premises &&
           a.nm_premises == b.nm_premises && a.context == b.context &&
           a.sufficiency == b.sufficiency && a.necessity == b.necessity && a.family == b.family &&
           a.conclusion == b.conclusion && a.rule_class == b.rule_class;
  }
};

struct DefaultDecl {
  WffPattern pattern;
  Interval interval;
  double theta = 1.0;

  friend bool operator==(const DefaultDecl&, const DefaultDecl&) = default;
};

struct RuleClass {
  ClassPath path;
  std::set<std::string> members;
};

struct KnowledgeBase {
  std::set<std::string> object_types;
  std::map<std::string, int> predicates;  // name -> arity
  std::set<ClassPath> classes;            // every declared path and its ancestors
  std::vector<RuleTemplate> templates;    // sorted by name
  std::map<std::string, Tnorm> aggregation;
  std::map<std::string, double> ignorance_thresholds;
  std::vector<WffPattern> declared_inputs;
  std::vector<DefaultDecl> defaults;

  const RuleTemplate* find_template(std::string_view name) const;
  bool concludes(const std::string& signature) const;
  /// Family used to fold the labels entering a wff of `variable`: declared,
  /// else the family every concluding rule shares, else T3.
  Tnorm aggregation_for(const std::string& variable) const;
  std::vector<RuleClass> rule_classes() const;

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.object_types == b.object_types && a.predicates == b.predicates &&
           a.classes == b.classes && a.templates == b.templates &&
           a.aggregation == b.aggregation && a.ignorance_thresholds == b.ignorance_thresholds &&
           a.declared_inputs == b.declared_inputs && a.defaults == b.defaults;
  }
};

inline const ClassPath kDefaultClass{"default"};

KnowledgeBase parse_kb(std::string_view source);

std::string format_pattern(const WffPattern& p);
std::string format_premise(const Premise& p);

/// Canonical text: sorted declarations, one rule per block, normalized spacing.
std::string print_kb(const KnowledgeBase& kb);

struct ObjectRef {
  std::string id;
  std::string type;
};

struct RuleInstance {
  std::string id;  // template@obj1,obj2 in variable order; the template name when unbound
  std::string template_name;
  std::map<std::string, std::string> bindings;
  std::vector<WffKey> ground_premises;  // wff-valued premises (incl. tests and NM) in order
  WffKey ground_conclusion;
};

WffKey ground(const WffPattern& p, const std::map<std::string, std::string>& bindings);
std::vector<std::string> ground_args(const std::vector<Term>& args,
                                     const std::map<std::string, std::string>& bindings);

/// Substitutes `bindings` into `t`; the result is fully propositional.
RuleInstance instantiate(const RuleTemplate& t, const std::map<std::string, ObjectRef>& bindings);

/// Templates whose class lies at or below any listed path; empty filter selects all.
std::set<std::string> scope_rules(const KnowledgeBase& kb, const std::vector<ClassPath>& filter);

}  // namespace prk

#include "prk/predicates.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace prk {

namespace {

void want_args(std::span<const std::string> args, std::size_t n, const char* name) {
  if (args.size() != n) {
    throw PredicateError(std::string(name) + " expects " + std::to_string(n) + " arguments, got " +
                         std::to_string(args.size()));
  }
}

double parse_double(const std::string& s, const char* name) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw PredicateError(std::string(name) + ": not a number: " + s);
  return v;
}

double attr_equals(const PredicateEnv& env, std::span<const std::string> args) {
  auto obj = env.objects.find(args[0]);
  if (obj == env.objects.end()) return 0.0;
  auto a = obj->second.attributes.find(args[1]);
  return a != obj->second.attributes.end() && a->second == args[2] ? 1.0 : 0.0;
}

template <class Cmp>
PredicateFn meta_compare(const char* name, Cmp cmp) {
  return [name, cmp](const PredicateEnv& env, std::span<const std::string> args) {
    want_args(args, 2, name);
    auto it = env.meta.find(args[0]);
    if (it == env.meta.end()) return 0.0;
    return cmp(it->second, parse_double(args[1], name)) ? 1.0 : 0.0;
  };
}

}  // namespace

PredicateRegistry PredicateRegistry::with_builtins() {
  PredicateRegistry r;
  r.add("attr=", [](const PredicateEnv& env, std::span<const std::string> args) {
    want_args(args, 3, "attr=");
    return attr_equals(env, args);
  });
  r.add("attr!=", [](const PredicateEnv& env, std::span<const std::string> args) {
    want_args(args, 3, "attr!=");
    return 1.0 - attr_equals(env, args);
  });
  r.add("meta>", meta_compare("meta>", std::greater<double>()));
  r.add("meta>=", meta_compare("meta>=", std::greater_equal<double>()));
  r.add("meta<", meta_compare("meta<", std::less<double>()));
  r.add("meta<=", meta_compare("meta<=", std::less_equal<double>()));
  r.add("meta=", meta_compare("meta=", std::equal_to<double>()));
  r.add("always", [](const PredicateEnv&, std::span<const std::string>) { return 1.0; });
  r.add("never", [](const PredicateEnv&, std::span<const std::string>) { return 0.0; });
  return r;
}

bool reads_meta_only(const std::string& p) { return p.rfind("meta", 0) == 0 || p == "always" || p == "never"; }

void PredicateRegistry::add(std::string name, PredicateFn fn) { fns_[std::move(name)] = std::move(fn); }

const PredicateFn* PredicateRegistry::find(const std::string& name) const {
  auto it = fns_.find(name);
  return it == fns_.end() ? nullptr : &it->second;
}

std::vector<std::string> PredicateRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : fns_) out.push_back(k);
  return out;
}

double PredicateRegistry::call(const std::string& name, const PredicateEnv& env,
                               std::span<const std::string> args) const {
  const PredicateFn* fn = find(name);
  if (!fn) throw PredicateError("unregistered predicate " + name);
  double v = (*fn)(env, args);
  if (std::isnan(v)) return 0.0;
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace prk

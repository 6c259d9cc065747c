#pragma once

#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace prk {

struct ObjectInfo {
  std::string type;
  std::map<std::string, std::string> attributes;
};

using ObjectTable = std::map<std::string, ObjectInfo>;

/// What a host predicate may read: object attributes and meta variables.
struct PredicateEnv {
  const ObjectTable& objects;
  const std::map<std::string, double>& meta;
};

/// Returns a confidence in [0,1]; boolean predicates return 0 or 1.
using PredicateFn = std::function<double(const PredicateEnv&, std::span<const std::string>)>;

class PredicateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class PredicateRegistry {
public:
  /// Registry preloaded with the builtins:
  ///   (attr= ?o name value) (attr!= ?o name value)
  ///   (meta> name x) (meta>= name x) (meta< name x) (meta<= name x) (meta= name x)
  ///   (always) (never)
  static PredicateRegistry with_builtins();

  void add(std::string name, PredicateFn fn);
  const PredicateFn* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }
  std::vector<std::string> names() const;

  /// Calls `name`, clamping the result into [0,1].
  double call(const std::string& name, const PredicateEnv& env, std::span<const std::string> args) const;

private:
  std::map<std::string, PredicateFn> fns_;
};

/// True for builtins that only read meta variables.
bool reads_meta_only(const std::string& predicate);

}  // namespace prk

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "prk/compiler.hpp"
#include "prk/kb.hpp"

namespace prk {

inline constexpr int kNetworkVersion = 1;

class NetworkError : public std::runtime_error {
public:
  enum class Kind { Format, Version, Checksum, Invariant, UndeclaredPredicate };
  NetworkError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

struct CompiledNetwork {
  KnowledgeBase kb;
  RuleGraph graph;
  std::string kb_hash;
};

std::string sha256_hex(std::string_view data);

/// Compiles a KB: builds and checks the graph, hashes the canonical KB text.
CompiledNetwork compile(const KnowledgeBase& kb);

/// Canonical `.rkn` text.  Throws NetworkError when a rule calls an
/// undeclared predicate or uses the wrong arity.
std::string emit_network(const RuleGraph& graph, const KnowledgeBase& kb);

CompiledNetwork load_network(std::string_view bytes);

}  // namespace prk

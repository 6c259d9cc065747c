#include <algorithm>

#include "prk/engine.hpp"

namespace prk {

std::vector<Conflict> Engine::detect_conflicts() {
  propagate();
  std::vector<NodeId> wffs;
  for (NodeId n = 0; n < nodes_.size(); ++n) {
    if (nodes_[n].kind == NodeKind::Wff && is_conflict(value(n))) wffs.push_back(n);
  }
  std::sort(wffs.begin(), wffs.end(), [&](NodeId a, NodeId b) { return wff(a).id < wff(b).id; });
  std::vector<Conflict> out;
  for (NodeId n : wffs) {
    Interval v = value(n);
    Conflict c{wff(n).id, v.lb, 1.0 - v.ub, {}, false};
    c.suspected_sources = suspected_sources(n, c.search_truncated);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::vector<std::string>> Engine::suspected_sources(NodeId w, bool& truncated) {
  std::vector<NodeId> inputs;
  for (NodeId a : ancestors(w)) {
    if (nodes_[a].kind == NodeKind::Wff && wff(a).input && wff(a).evidence) inputs.push_back(a);
  }
  std::sort(inputs.begin(), inputs.end(), [&](NodeId a, NodeId b) { return wff(a).id < wff(b).id; });
  truncated = inputs.size() > options_.conflict_search_inputs;
  if (truncated) inputs.resize(options_.conflict_search_inputs);

  std::vector<std::vector<std::string>> found;
  const std::size_t n = inputs.size();
  for (std::size_t k = 1; k <= n && found.empty(); ++k) {
    // Lexicographic k-combinations of input indices.
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      std::map<NodeId, Interval> overrides;
      for (std::size_t i : idx) overrides[inputs[i]] = Interval::unknown();
      if (!is_conflict(evaluate_with_overrides(w, overrides))) {
        std::vector<std::string> ids;
        for (std::size_t i : idx) ids.push_back(wff(inputs[i]).id);
        found.push_back(std::move(ids));
      }
      std::size_t i = k;
      while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return found;
}

std::vector<Conflict> Engine::handle_conflicts() {
  std::vector<Conflict> conflicts = detect_conflicts();
  if (options_.conflict_policy != ConflictPolicy::ResetSources) return conflicts;
  std::set<std::string> reset;
  for (const Conflict& c : conflicts) {
    for (const auto& s : c.suspected_sources) reset.insert(s.begin(), s.end());
  }
  for (const std::string& id : reset) retract_evidence(id);
  if (!reset.empty()) propagate();
  return conflicts;
}

}  // namespace prk

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prk/engine.hpp"
#include "prk/scenario.hpp"

namespace prk {

class MappingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Ties a per-object goal variable, e.g. `turn-away-and-run(?c)`, to a
/// ground-truth label of the same object.
struct LabelMapping {
  std::string variable;
  std::string value = "true";
  std::string label;
};

struct LabelMap {
  double threshold = 0.5;  // goal believed when LB >= threshold
  std::vector<LabelMapping> mappings;

  const LabelMapping* find(const std::string& variable) const;
};

/// `.rmap` forms: `(threshold 0.5)` and `(map VARIABLE [:value V] :label LABEL)`.
LabelMap parse_label_map(std::string_view text);

struct GoalReport {
  std::string goal;  // wff id
  std::string object;
  std::string label;
  std::optional<double> first_believed;
  std::optional<double> first_true;
  std::size_t phases = 0;
  std::size_t agree = 0;
  Interval final_interval = Interval::unknown();
  std::vector<std::string> dominant;  // rule chain behind the decisive phase
};

struct ValidationReport {
  std::string scenario;
  double threshold = 0.5;
  std::size_t phases = 0;
  std::vector<GoalReport> goals;  // sorted by goal id

  std::string format_records() const;
  std::string format_text() const;
};

/// Replays `track` into a fresh engine, querying every mapped goal for every
/// ground-truth object after each phase.  `goals` restricts the report to
/// those variables; each must be mapped.
ValidationReport validate(const CompiledNetwork& net, const TrackFile& track, const GroundTruth& truth,
                          const LabelMap& map, const PredicateRegistry& predicates = PredicateRegistry::with_builtins(),
                          const std::vector<std::string>& goals = {});

/// Rules along the dominant chain of a trace, goal first.
std::vector<std::string> dominant_rules(const TraceNode& trace);

}  // namespace prk

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "prk/engine.hpp"

namespace prk {

struct TimingEntry {
  CostKind kind = CostKind::Rule;
  std::string name;
  double cost_us = 0.0;
  std::size_t samples = 0;
  bool measured = false;
  std::vector<double> raw;  // kept samples after warm-up; not serialized
};

struct TimingTable {
  std::string track_id;
  std::size_t sample_count = 0;
  double default_cost_us = 0.0;
  std::map<std::pair<CostKind, std::string>, TimingEntry> entries;

  /// Cost of a rule or predicate; names without an entry get default_cost_us.
  double cost(CostKind kind, const std::string& name) const;
  const TimingEntry* find(CostKind kind, const std::string& name) const;
};

struct ProfileOptions {
  std::size_t samples = 30;
  std::size_t warmup = 3;
};

double median(std::vector<double> v);
/// Nearest-rank percentile, p in (0, 100].
double percentile(std::vector<double> v, double p);

/// Replays `track` into a fresh engine and fires every reachable rule and
/// predicate until it has `warmup + samples` timings.  Unreached entries are
/// flagged unmeasured and cost the 90th percentile of the measured ones.
TimingTable profile(const CompiledNetwork& net, const TrackFile& track, const PredicateRegistry& predicates,
                    const ProfileOptions& options = {}, const std::string& track_id = "");

/// `.rkt` text:
///   RKT1
///   track <id>
///   samples <n>
///   default-cost <us>
///   rule|predicate <name> <cost-us> <samples> measured|unmeasured
std::string write_timing(const TimingTable& table);
TimingTable read_timing(std::string_view text);

}  // namespace prk

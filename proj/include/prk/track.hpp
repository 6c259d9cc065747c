#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "prk/kb.hpp"

namespace prk {

/// One perceived observation.  `object` is "-" for propositional variables.
struct TrackRecord {
  double t = 0.0;
  std::string object;
  std::string variable;
  std::string value;
  double lb = 0.0;
  double ub = 1.0;

  WffKey wff() const;
  friend bool operator==(const TrackRecord&, const TrackRecord&) = default;
};

struct TrackFile {
  std::vector<TrackRecord> records;  // non-decreasing t

  friend bool operator==(const TrackFile&, const TrackFile&) = default;
};

class TrackError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Format: first line `RTF1`, then `t object variable value lb ub` per line.
/// Blank lines and lines starting with ';' are skipped.
TrackFile read_track(std::string_view text);
std::string write_track(const TrackFile& track);

}  // namespace prk

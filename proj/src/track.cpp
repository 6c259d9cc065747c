#include "prk/track.hpp"

#include <charconv>
#include <sstream>

#include "prk/sexpr.hpp"

namespace prk {

WffKey TrackRecord::wff() const {
  WffKey k{variable, {}, value};
  if (object != "-") k.args.push_back(object);
  return k;
}

namespace {

double number(const std::string& s, std::size_t line) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw TrackError("track line " + std::to_string(line) + ": expected a number, got '" + s + "'");
  }
  return v;
}

}  // namespace

TrackFile read_track(std::string_view text) {
  TrackFile out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == ';') continue;
    if (!header) {
      if (line != "RTF1") throw TrackError("track line " + std::to_string(n) + ": expected header RTF1");
      header = true;
      continue;
    }
    std::istringstream fields(line);
    std::string t, obj, var, val, lb, ub, extra;
    if (!(fields >> t >> obj >> var >> val >> lb >> ub) || (fields >> extra)) {
      throw TrackError("track line " + std::to_string(n) + ": expected 't object variable value lb ub'");
    }
    TrackRecord r{number(t, n), obj, var, val, number(lb, n), number(ub, n)};
    if (r.lb < 0 || r.ub > 1 || r.lb > r.ub) throw TrackError("track line " + std::to_string(n) + ": invalid interval");
    if (!out.records.empty() && r.t < out.records.back().t) {
      throw TrackError("track line " + std::to_string(n) + ": records are not time-ordered");
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

std::string write_track(const TrackFile& track) {
  std::string out = "RTF1\n";
  for (const TrackRecord& r : track.records) {
    out += format_number(r.t) + " " + r.object + " " + r.variable + " " + r.value + " " + format_number(r.lb) + " " +
           format_number(r.ub) + "\n";
  }
  return out;
}

}  // namespace prk
